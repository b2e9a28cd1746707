import { describe, expect, it } from "vitest";

import type { IndicatorsPayload, RiskPayload, TrendPayload } from "../src/types.js";
import {
  SequenceGate,
  indicatorRows,
  initialPollState,
  onFetchFailure,
  onFetchSuccess,
  riskRows,
  trendChart,
  verdictColor,
  whatIfComparison,
} from "../src/viewmodel.js";

function indicatorsPayload(): IndicatorsPayload {
  return {
    schemaVersion: "1",
    indicators: [
      {
        id: "SPI_LRE",
        metric: "latRwyExcursions",
        expression: "opLatRwyEx",
        comparator: "<=",
        threshold: 1,
        thresholdDisplay: "<= 1",
        value: 0,
        valueDisplay: "0",
        exposureRequired: 10,
        exposureObserved: 10,
        exposureUnit: "opTxLowVisW",
        exposureDisplay: "10/10 opTxLowVisW",
        verdict: "met",
        links: [{ kind: "event", ref: "E4" }],
        error: null,
      },
      {
        id: "SPI_PFO",
        metric: "pcpDisEngFailures",
        expression: "opPcpDisEngF",
        comparator: "<=",
        threshold: 2,
        thresholdDisplay: "<= 2",
        value: 4,
        valueDisplay: "4",
        exposureRequired: 10,
        exposureObserved: 10,
        exposureUnit: "opTxLowVisW",
        exposureDisplay: "10/10 opTxLowVisW",
        verdict: "violated",
        links: [{ kind: "barrier", ref: "B4" }],
        error: null,
      },
      {
        id: "SPI_RMO",
        metric: "rwyMarkObscured",
        expression: "opRwyMarkObsc",
        comparator: "<=",
        threshold: 1,
        thresholdDisplay: "<= 1",
        value: null,
        valueDisplay: "-",
        exposureRequired: 10,
        exposureObserved: 3,
        exposureUnit: "opTxLowVisW",
        exposureDisplay: "3/10 opTxLowVisW",
        verdict: "insufficientExposure",
        links: [{ kind: "event", ref: "E2" }],
        error: null,
      },
    ],
  };
}

function riskPayload(probability: string, classification: string, rrBaseline: string): RiskPayload {
  return {
    schemaVersion: "1",
    events: [
      {
        id: "E4",
        name: "Lateral runway overrun",
        kind: "consequence",
        probability: 0,
        probabilityDisplay: probability,
        severity: 4,
        category: classification.slice(0, 2),
        level: classification.includes("Low") ? "Low" : "Medium",
        classificationDisplay: classification,
        riskRatios: { baseline: null, target: null, previousRevision: null },
        riskRatioDisplays: { baseline: rrBaseline, target: rrBaseline, previousRevision: "-" },
      },
      { id: "E3", name: "offset violation", kind: "top", probability: 0, probabilityDisplay: "0.004" },
    ],
    barriers: [
      { id: "B5", name: "Emergency Braking", role: "recovery", integrity: 0.996, integrityDisplay: "0.996", distribution: null },
    ],
    revisionCount: 1,
    overridesApplied: {},
  };
}

describe("verdict colors", () => {
  it("maps met to green, violated to red, the rest to neutral", () => {
    expect(verdictColor("met")).toBe("green");
    expect(verdictColor("violated")).toBe("red");
    expect(verdictColor("insufficientExposure")).toBe("neutral");
    expect(verdictColor("error")).toBe("neutral");
  });
});

describe("indicator rows", () => {
  it("copies display strings verbatim from the payload", () => {
    const payload = indicatorsPayload();
    const rows = indicatorRows(payload);
    expect(rows.map((r) => r.id)).toEqual(["SPI_LRE", "SPI_PFO", "SPI_RMO"]);
    for (const [i, row] of rows.entries()) {
      const source = payload.indicators[i]!;
      expect(row.value).toBe(source.valueDisplay);
      expect(row.threshold).toBe(source.thresholdDisplay);
      expect(row.exposure).toBe(source.exposureDisplay);
    }
    expect(rows[0]!.color).toBe("green");
    expect(rows[1]!.color).toBe("red");
    expect(rows[2]!.color).toBe("neutral");
  });
});

describe("risk rows", () => {
  it("keeps only classified (consequence) events", () => {
    const rows = riskRows(riskPayload("2.386e-05", "4D (Low)", "1.49"));
    expect(rows).toHaveLength(1);
    expect(rows[0]!.probability).toBe("2.386e-05");
    expect(rows[0]!.classification).toBe("4D (Low)");
  });
});

describe("what-if comparison", () => {
  it("flags changes by comparing display strings, no arithmetic", () => {
    const current = riskPayload("2.386e-05", "4D (Low)", "1.49");
    const relaxed = riskPayload("0.0002386", "4C (Medium)", "14.91");
    const rows = whatIfComparison(current, relaxed);
    expect(rows[0]!.changed).toBe(true);
    expect(rows[0]!.before!.probability).toBe("2.386e-05");
    expect(rows[0]!.after.probability).toBe("0.0002386");
  });

  it("identical state means no deltas", () => {
    const current = riskPayload("2.386e-05", "4D (Low)", "1.49");
    const rows = whatIfComparison(current, riskPayload("2.386e-05", "4D (Low)", "1.49"));
    expect(rows[0]!.changed).toBe(false);
  });
});

describe("trend chart", () => {
  const base: TrendPayload = {
    schemaVersion: "1",
    event: "E4",
    reference: "baseline",
    points: [],
    trend: null,
    trendError: "insufficient history",
    verdict: "stable",
  };

  it("shows a placeholder below two points", () => {
    const vm = trendChart({ ...base, points: [{ exposure: 10, rr: 1.49, rrDisplay: "1.49" }] });
    expect(vm.available).toBe(false);
    expect(vm.placeholder).toBe("insufficient history");
  });

  it("positions points and line, labels stay verbatim", () => {
    const vm = trendChart({
      ...base,
      points: [
        { exposure: 10, rr: 1.0, rrDisplay: "1.00" },
        { exposure: 20, rr: 1.49, rrDisplay: "1.49" },
      ],
      trend: { slope: 0.049, intercept: 0.51, points: 2, slopeDisplay: "0.049" },
      verdict: "drifting",
    });
    expect(vm.available).toBe(true);
    expect(vm.labels).toEqual(["1.00", "1.49"]);
    expect(vm.slope).toBe("0.049");
    expect(vm.points).toHaveLength(2);
    expect(vm.line).not.toBeNull();
    // upward trend renders as a falling y (SVG origin is top-left)
    expect(vm.line!.y2).toBeLessThan(vm.line!.y1);
    expect(vm.verdict).toBe("drifting");
  });
});

describe("poll state", () => {
  it("retains the last snapshot and raises the stale flag on failure", () => {
    let state = initialPollState<IndicatorsPayload>();
    expect(state.stale).toBe(false);
    state = onFetchFailure(state, "connect refused");
    expect(state.stale).toBe(false); // nothing to show yet
    state = onFetchSuccess(state, indicatorsPayload());
    expect(state.stale).toBe(false);
    const snapshot = state.snapshot;
    state = onFetchFailure(state, "connect refused");
    expect(state.stale).toBe(true);
    expect(state.snapshot).toBe(snapshot);
  });
});

describe("sequence gate", () => {
  it("discards responses that arrive after a newer request", () => {
    const gate = new SequenceGate();
    const first = gate.next();
    const second = gate.next();
    expect(gate.isCurrent(first)).toBe(false);
    expect(gate.isCurrent(second)).toBe(true);
  });
});
