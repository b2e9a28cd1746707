/** Thin fetch client for the driftwatch API. */

import type { IndicatorsPayload, RiskPayload, TrendPayload } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  indicators(): Promise<IndicatorsPayload> {
    return this.get<IndicatorsPayload>("/indicators");
  }

  risk(): Promise<RiskPayload> {
    return this.get<RiskPayload>("/risk");
  }

  trend(event: string): Promise<TrendPayload> {
    return this.get<TrendPayload>(`/trend?event=${encodeURIComponent(event)}`);
  }

  /** Scratch-copy what-if; the server never mutates its state for this. */
  async whatIf(overrides: Record<string, number>): Promise<RiskPayload> {
    const response = await fetch(`${this.base}/whatif`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ overrides }),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await describe(response));
    }
    return (await response.json()) as RiskPayload;
  }

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(`${this.base}${path}`);
    if (!response.ok) {
      throw new ApiError(response.status, await describe(response));
    }
    return (await response.json()) as T;
  }
}

async function describe(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}
