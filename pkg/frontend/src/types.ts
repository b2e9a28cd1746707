/**
 * Payload types for the driftwatch JSON API (schemaVersion 1).
 *
 * Every number a client is expected to show comes with a preformatted
 * `...Display` string; the dashboard renders those verbatim and never
 * formats or computes numbers itself.
 */

export type Verdict = "met" | "violated" | "insufficientExposure" | "error";
export type DriftVerdict = "stable" | "drifting" | "thresholdViolated";

export interface ArtifactLink {
  kind: string;
  ref: string;
}

export interface IndicatorRow {
  id: string;
  metric: string;
  expression: string | null;
  comparator: string;
  threshold: number;
  thresholdDisplay: string;
  value: number | null;
  valueDisplay: string;
  exposureRequired: number;
  exposureObserved: number;
  exposureUnit: string;
  exposureDisplay: string;
  verdict: Verdict;
  links: ArtifactLink[];
  error: string | null;
}

export interface IndicatorsPayload {
  schemaVersion: string;
  indicators: IndicatorRow[];
}

export interface RiskRatios {
  baseline: number | null;
  target: number | null;
  previousRevision: number | null;
}

export interface RiskRatioDisplays {
  baseline: string;
  target: string;
  previousRevision: string;
}

export interface EventRow {
  id: string;
  name: string;
  kind: string;
  probability: number;
  probabilityDisplay: string;
  severity?: number;
  category?: string;
  level?: string;
  classificationDisplay?: string;
  baselineProbability?: number | null;
  baselineDisplay?: string;
  riskRatios?: RiskRatios;
  riskRatioDisplays?: RiskRatioDisplays;
}

export interface BetaSummary {
  alpha: number;
  beta: number;
  mean: number;
  variance: number;
}

export interface BarrierRow {
  id: string;
  name: string;
  role: string;
  integrity: number;
  integrityDisplay: string;
  distribution: BetaSummary | null;
}

export interface RiskPayload {
  schemaVersion: string;
  events: EventRow[];
  barriers: BarrierRow[];
  revisionCount: number;
  overridesApplied: Record<string, number>;
  whatIfOverrides?: Record<string, number>;
}

export interface TrendPoint {
  exposure: number;
  rr: number;
  rrDisplay: string;
}

export interface TrendLine {
  slope: number;
  intercept: number;
  points: number;
  slopeDisplay: string;
}

export interface TrendPayload {
  schemaVersion: string;
  event: string;
  reference: string;
  points: TrendPoint[];
  trend: TrendLine | null;
  trendError: string | null;
  verdict: DriftVerdict;
}
