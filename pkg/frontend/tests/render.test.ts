import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  renderIndicatorTable,
  renderStaleBanner,
  renderTrendChart,
  renderWhatIfResult,
} from "../src/render.js";
import type { IndicatorRowVM, TrendChartVM, WhatIfRowVM } from "../src/viewmodel.js";

const metRow: IndicatorRowVM = {
  id: "SPI_LRE",
  value: "0",
  threshold: "<= 1",
  exposure: "10/10 opTxLowVisW",
  verdict: "met",
  color: "green",
  links: "event:E4",
  error: null,
};

const violatedRow: IndicatorRowVM = {
  id: "SPI_PFO",
  value: "4",
  threshold: "<= 2",
  exposure: "10/10 opTxLowVisW",
  verdict: "violated",
  color: "red",
  links: "barrier:B4",
  error: null,
};

describe("indicator table", () => {
  it("tags rows with verdict color classes", () => {
    const html = renderIndicatorTable([metRow, violatedRow]);
    expect(html).toContain('class="verdict-green" data-indicator="SPI_LRE"');
    expect(html).toContain('class="verdict-red" data-indicator="SPI_PFO"');
    expect(html).toContain("&lt;= 2");
    expect(html).toContain("10/10 opTxLowVisW");
  });

  it("renders an empty state", () => {
    expect(renderIndicatorTable([])).toContain("empty-state");
  });

  it("surfaces error rows inline", () => {
    const html = renderIndicatorTable([{ ...metRow, color: "neutral", verdict: "error", error: "boom" }]);
    expect(html).toContain("error: boom");
    expect(html).toContain("verdict-neutral");
  });
});

describe("what-if panel", () => {
  it("shows before/after side by side and the applied overrides", () => {
    const row: WhatIfRowVM = {
      id: "E4",
      before: {
        id: "E4", name: "n", probability: "2.386e-05", classification: "4D (Low)",
        level: "Low", rrBaseline: "1.49", rrTarget: "1.49", rrPrevious: "-",
      },
      after: {
        id: "E4", name: "n", probability: "0.0002386", classification: "4C (Medium)",
        level: "Medium", rrBaseline: "14.91", rrTarget: "14.91", rrPrevious: "10.00",
      },
      changed: true,
    };
    const html = renderWhatIfResult([row], { B5: 0.96 });
    expect(html).toContain("<code>B5</code>");
    expect(html).toContain("2.386e-05");
    expect(html).toContain("0.0002386");
    expect(html).toContain("4C (Medium)");
    expect(html).toContain("14.91");
    expect(html).toContain("10.00");
    expect(html).toContain('class="changed"');
  });
});

describe("trend chart", () => {
  it("renders the placeholder when unavailable", () => {
    const vm: TrendChartVM = {
      available: false, placeholder: "insufficient history", verdict: "stable",
      slope: null, reference: "baseline", labels: [], points: [], line: null,
    };
    const html = renderTrendChart(vm);
    expect(html).toContain("insufficient history");
    expect(html).toContain("drift-stable");
  });

  it("renders dots, a fitted line, and the verdict badge", () => {
    const vm: TrendChartVM = {
      available: true, placeholder: null, verdict: "thresholdViolated",
      slope: "0.049", reference: "baseline", labels: ["1.00", "1.49"],
      points: [{ x: 5, y: 95, label: "1.00" }, { x: 95, y: 5, label: "1.49" }],
      line: { x1: 5, y1: 95, x2: 95, y2: 5 },
    };
    const html = renderTrendChart(vm);
    expect(html).toContain("<svg");
    expect(html).toContain("circle");
    expect(html).toContain("trend-line");
    expect(html).toContain("drift-thresholdViolated");
    expect(html).toContain("slope 0.049");
  });
});

describe("stale banner", () => {
  it("is empty while the connection is healthy", () => {
    expect(renderStaleBanner(false, null)).toBe("");
  });

  it("announces the retained snapshot on loss", () => {
    const html = renderStaleBanner(true, "fetch failed");
    expect(html).toContain("stale-banner");
    expect(html).toContain("last snapshot");
  });
});

describe("escaping", () => {
  it("escapes markup-significant characters", () => {
    expect(escapeHtml('<= "1" & <2>')).toBe("&lt;= &quot;1&quot; &amp; &lt;2&gt;");
  });
});
