/**
 * Dashboard wiring: polling loop, what-if panel state, DOM updates.
 *
 * All rendering goes through the pure builders in viewmodel.ts/render.ts;
 * this file only moves strings into the page and wires events.
 */

import { ApiClient, ApiError } from "./api.js";
import {
  renderBarrierOptions,
  renderIndicatorTable,
  renderRiskTable,
  renderStaleBanner,
  renderTrendChart,
  renderWhatIfResult,
} from "./render.js";
import type { IndicatorsPayload, RiskPayload, TrendPayload } from "./types.js";
import {
  PollState,
  SequenceGate,
  barrierRows,
  indicatorRows,
  initialPollState,
  onFetchFailure,
  onFetchSuccess,
  riskRows,
  trendChart,
  whatIfComparison,
} from "./viewmodel.js";

interface Elements {
  banner: HTMLElement;
  indicators: HTMLElement;
  risk: HTMLElement;
  trend: HTMLElement;
  barrierSelect: HTMLSelectElement;
  integrityInput: HTMLInputElement;
  integrityReadout: HTMLElement;
  applyButton: HTMLButtonElement;
  resetButton: HTMLButtonElement;
  whatIfResult: HTMLElement;
}

export class Dashboard {
  private indicatorsState: PollState<IndicatorsPayload> = initialPollState();
  private riskState: PollState<RiskPayload> = initialPollState();
  private trendState: PollState<TrendPayload> = initialPollState();
  /** Accumulated what-if overrides; the next adjustment starts from the last result. */
  private overrides: Record<string, number> = {};
  private gate = new SequenceGate();
  private trendEvent: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly el: Elements,
    private readonly intervalMs = 1000,
  ) {}

  start(): void {
    void this.refresh();
    setInterval(() => void this.refresh(), this.intervalMs);
    this.el.integrityInput.addEventListener("input", () => {
      this.el.integrityReadout.textContent = this.el.integrityInput.value;
    });
    this.el.applyButton.addEventListener("click", () => void this.applyWhatIf());
    this.el.resetButton.addEventListener("click", () => {
      this.overrides = {};
      this.el.whatIfResult.innerHTML = "";
    });
  }

  async refresh(): Promise<void> {
    try {
      const indicators = await this.api.indicators();
      this.indicatorsState = onFetchSuccess(this.indicatorsState, indicators);
      const risk = await this.api.risk();
      this.riskState = onFetchSuccess(this.riskState, risk);
      const firstConsequence = riskRows(risk)[0];
      this.trendEvent = this.trendEvent ?? firstConsequence?.id ?? null;
      if (this.trendEvent) {
        this.trendState = onFetchSuccess(this.trendState, await this.api.trend(this.trendEvent));
      }
    } catch (error) {
      const message = error instanceof Error ? error.message : String(error);
      this.indicatorsState = onFetchFailure(this.indicatorsState, message);
      this.riskState = onFetchFailure(this.riskState, message);
      this.trendState = onFetchFailure(this.trendState, message);
    }
    this.render();
  }

  private render(): void {
    this.el.banner.innerHTML = renderStaleBanner(
      this.indicatorsState.stale || this.riskState.stale,
      this.indicatorsState.error ?? this.riskState.error,
    );
    if (this.indicatorsState.snapshot) {
      this.el.indicators.innerHTML = renderIndicatorTable(indicatorRows(this.indicatorsState.snapshot));
    }
    if (this.riskState.snapshot) {
      this.el.risk.innerHTML = renderRiskTable(riskRows(this.riskState.snapshot));
      const barriers = barrierRows(this.riskState.snapshot);
      const selected = this.el.barrierSelect.value || barriers[0]?.id || null;
      this.el.barrierSelect.innerHTML = renderBarrierOptions(barriers, selected);
    }
    if (this.trendState.snapshot) {
      this.el.trend.innerHTML = renderTrendChart(trendChart(this.trendState.snapshot));
    }
  }

  /** POST the accumulated override map; stale responses are discarded. */
  async applyWhatIf(): Promise<void> {
    const current = this.riskState.snapshot;
    if (!current) {
      return;
    }
    const element = this.el.barrierSelect.value;
    const value = Number(this.el.integrityInput.value);
    const seq = this.gate.next();
    const attempted = { ...this.overrides, [element]: value };
    try {
      const result = await this.api.whatIf(attempted);
      if (!this.gate.isCurrent(seq)) {
        return; // a newer adjustment superseded this one
      }
      this.overrides = attempted;
      this.el.whatIfResult.innerHTML = renderWhatIfResult(
        whatIfComparison(current, result),
        this.overrides,
      );
    } catch (error) {
      if (!this.gate.isCurrent(seq)) {
        return;
      }
      const message =
        error instanceof ApiError ? `${error.status}: ${error.detail}` : String(error);
      this.el.whatIfResult.innerHTML = `<p class="inline-error">what-if failed — ${message}</p>`;
    }
  }
}

export function mount(doc: Document, api: ApiClient, intervalMs = 1000): Dashboard {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) {
      throw new Error(`missing element #${id}`);
    }
    return node as T;
  };
  const dashboard = new Dashboard(
    api,
    {
      banner: byId("banner"),
      indicators: byId("indicator-table"),
      risk: byId("risk-table"),
      trend: byId("trend-chart"),
      barrierSelect: byId<HTMLSelectElement>("whatif-barrier"),
      integrityInput: byId<HTMLInputElement>("whatif-integrity"),
      integrityReadout: byId("whatif-integrity-readout"),
      applyButton: byId<HTMLButtonElement>("whatif-apply"),
      resetButton: byId<HTMLButtonElement>("whatif-reset"),
      whatIfResult: byId("whatif-result"),
    },
    intervalMs,
  );
  dashboard.start();
  return dashboard;
}
