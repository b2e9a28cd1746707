/**
 * Pure view-model builders: API payloads in, render-ready rows out.
 *
 * Invariant: every string placed in a view model that represents a number is
 * taken verbatim from an API `...Display` field (or is a join of such
 * fields), so what the user sees is byte-equal to what the engine computed.
 * Equality comparisons between states compare those strings, never numbers.
 */

import type {
  EventRow,
  IndicatorRow,
  IndicatorsPayload,
  RiskPayload,
  TrendPayload,
  Verdict,
} from "./types.js";

export type VerdictColor = "green" | "red" | "neutral";

export function verdictColor(verdict: Verdict): VerdictColor {
  switch (verdict) {
    case "met":
      return "green";
    case "violated":
      return "red";
    default:
      // insufficientExposure and error rows stay neutral: no false green/red
      return "neutral";
  }
}

export interface IndicatorRowVM {
  id: string;
  value: string;
  threshold: string;
  exposure: string;
  verdict: Verdict;
  color: VerdictColor;
  links: string;
  error: string | null;
}

export function indicatorRows(payload: IndicatorsPayload): IndicatorRowVM[] {
  return payload.indicators.map((row: IndicatorRow) => ({
    id: row.id,
    value: row.valueDisplay,
    threshold: row.thresholdDisplay,
    exposure: row.exposureDisplay,
    verdict: row.verdict,
    color: verdictColor(row.verdict),
    links: row.links.map((l) => `${l.kind}:${l.ref}`).join(", "),
    error: row.error,
  }));
}

export interface RiskRowVM {
  id: string;
  name: string;
  probability: string;
  classification: string;
  level: string;
  rrBaseline: string;
  rrTarget: string;
  rrPrevious: string;
}

export function riskRows(payload: RiskPayload): RiskRowVM[] {
  return payload.events
    .filter((row: EventRow) => row.classificationDisplay !== undefined)
    .map((row: EventRow) => ({
      id: row.id,
      name: row.name,
      probability: row.probabilityDisplay,
      classification: row.classificationDisplay ?? "",
      level: row.level ?? "",
      rrBaseline: row.riskRatioDisplays?.baseline ?? "-",
      rrTarget: row.riskRatioDisplays?.target ?? "-",
      rrPrevious: row.riskRatioDisplays?.previousRevision ?? "-",
    }));
}

export interface BarrierVM {
  id: string;
  name: string;
  role: string;
  integrity: string;
  integrityValue: number; // slider position only, never displayed
}

export function barrierRows(payload: RiskPayload): BarrierVM[] {
  return payload.barriers.map((b) => ({
    id: b.id,
    name: b.name,
    role: b.role,
    integrity: b.integrityDisplay,
    integrityValue: b.integrity,
  }));
}

/** Side-by-side what-if comparison; `changed` compares display strings. */
export interface WhatIfRowVM {
  id: string;
  before: RiskRowVM | undefined;
  after: RiskRowVM;
  changed: boolean;
}

export function whatIfComparison(current: RiskPayload, result: RiskPayload): WhatIfRowVM[] {
  const before = new Map(riskRows(current).map((row) => [row.id, row]));
  return riskRows(result).map((after) => {
    const prior = before.get(after.id);
    const changed =
      prior === undefined ||
      prior.probability !== after.probability ||
      prior.classification !== after.classification ||
      prior.rrBaseline !== after.rrBaseline;
    return { id: after.id, before: prior, after, changed };
  });
}

export interface TrendChartVM {
  available: boolean;
  placeholder: string | null;
  verdict: string;
  slope: string | null;
  reference: string;
  labels: string[]; // rrDisplay strings, verbatim
  // geometry in a 0..100 viewBox; positioning only, no displayed numbers
  points: { x: number; y: number; label: string }[];
  line: { x1: number; y1: number; x2: number; y2: number } | null;
}

export function trendChart(payload: TrendPayload): TrendChartVM {
  if (payload.points.length < 2) {
    return {
      available: false,
      placeholder: "insufficient history",
      verdict: payload.verdict,
      slope: null,
      reference: payload.reference,
      labels: payload.points.map((p) => p.rrDisplay),
      points: [],
      line: null,
    };
  }
  const xs = payload.points.map((p) => p.exposure);
  const ys = payload.points.map((p) => p.rr);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys, payload.trend ? payload.trend.intercept : ys[0] ?? 0);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  const toX = (x: number) => 5 + (90 * (x - xMin)) / xSpan;
  const toY = (y: number) => 95 - (90 * (y - yMin)) / ySpan;
  const points = payload.points.map((p) => ({ x: toX(p.exposure), y: toY(p.rr), label: p.rrDisplay }));
  let line: TrendChartVM["line"] = null;
  if (payload.trend) {
    const { slope, intercept } = payload.trend;
    line = {
      x1: toX(xMin),
      y1: toY(slope * xMin + intercept),
      x2: toX(xMax),
      y2: toY(slope * xMax + intercept),
    };
  }
  return {
    available: true,
    placeholder: null,
    verdict: payload.verdict,
    slope: payload.trend?.slopeDisplay ?? null,
    reference: payload.reference,
    labels: payload.points.map((p) => p.rrDisplay),
    points,
    line,
  };
}

/** Connection state: on failure the last snapshot is retained and flagged stale. */
export interface PollState<T> {
  snapshot: T | null;
  stale: boolean;
  error: string | null;
}

export function initialPollState<T>(): PollState<T> {
  return { snapshot: null, stale: false, error: null };
}

export function onFetchSuccess<T>(_state: PollState<T>, snapshot: T): PollState<T> {
  return { snapshot, stale: false, error: null };
}

export function onFetchFailure<T>(state: PollState<T>, error: string): PollState<T> {
  return { snapshot: state.snapshot, stale: state.snapshot !== null, error };
}

/**
 * Sequence gate: at most one what-if request is applied at a time; responses
 * arriving after a newer request was issued are discarded.
 */
export class SequenceGate {
  private latest = 0;

  next(): number {
    return ++this.latest;
  }

  isCurrent(seq: number): boolean {
    return seq === this.latest;
  }
}
