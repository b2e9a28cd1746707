/** HTML renderers over the view models. Pure string builders, no DOM access. */

import type {
  BarrierVM,
  IndicatorRowVM,
  RiskRowVM,
  TrendChartVM,
  WhatIfRowVM,
} from "./viewmodel.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const esc = escapeHtml;

export function renderIndicatorTable(rows: IndicatorRowVM[]): string {
  if (rows.length === 0) {
    return '<p class="empty-state">No indicators declared in this project.</p>';
  }
  const body = rows
    .map((row) => {
      const verdict = row.error ? `error: ${row.error}` : row.verdict;
      return (
        `<tr class="verdict-${row.color}" data-indicator="${esc(row.id)}">` +
        `<td>${esc(row.id)}</td>` +
        `<td class="num">${esc(row.value)}</td>` +
        `<td class="num">${esc(row.threshold)}</td>` +
        `<td class="num">${esc(row.exposure)}</td>` +
        `<td class="verdict">${esc(verdict)}</td>` +
        `<td class="links">${esc(row.links)}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    "<table><thead><tr>" +
    "<th>indicator</th><th>value</th><th>threshold</th><th>exposure</th><th>verdict</th><th>linked artifacts</th>" +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderRiskTable(rows: RiskRowVM[]): string {
  if (rows.length === 0) {
    return '<p class="empty-state">No consequence events.</p>';
  }
  const body = rows
    .map(
      (row) =>
        `<tr class="level-${esc(row.level)}" data-event="${esc(row.id)}">` +
        `<td>${esc(row.id)}</td>` +
        `<td class="num">${esc(row.probability)}</td>` +
        `<td>${esc(row.classification)}</td>` +
        `<td class="num">${esc(row.rrBaseline)}</td>` +
        `<td class="num">${esc(row.rrTarget)}</td>` +
        `<td class="num">${esc(row.rrPrevious)}</td>` +
        `</tr>`,
    )
    .join("");
  return (
    "<table><thead><tr>" +
    "<th>event</th><th>probability</th><th>RRL</th><th>RR vs baseline</th><th>RR vs target</th><th>RR vs previous</th>" +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderBarrierOptions(barriers: BarrierVM[], selected: string | null): string {
  return barriers
    .map(
      (b) =>
        `<option value="${esc(b.id)}"${b.id === selected ? " selected" : ""}>` +
        `${esc(b.id)} — ${esc(b.name)} (${esc(b.integrity)})</option>`,
    )
    .join("");
}

export function renderWhatIfResult(rows: WhatIfRowVM[], overrides: Record<string, number>): string {
  const applied = Object.keys(overrides)
    .sort()
    .map((id) => `<code>${esc(id)}</code>`)
    .join(", ");
  const body = rows
    .map((row) => {
      const before = row.before;
      return (
        `<tr data-event="${esc(row.id)}" class="${row.changed ? "changed" : "unchanged"}">` +
        `<td>${esc(row.id)}</td>` +
        `<td class="num">${before ? esc(before.probability) : "-"}</td>` +
        `<td class="num">${esc(row.after.probability)}</td>` +
        `<td>${before ? esc(before.classification) : "-"}</td>` +
        `<td>${esc(row.after.classification)}</td>` +
        `<td class="num">${before ? esc(before.rrBaseline) : "-"}</td>` +
        `<td class="num">${esc(row.after.rrBaseline)}</td>` +
        `<td class="num">${esc(row.after.rrPrevious)}</td>` +
        `</tr>`
      );
    })
    .join("");
  return (
    `<p class="whatif-applied">exploring: ${applied || "no overrides"}</p>` +
    "<table><thead><tr>" +
    "<th>event</th><th>Pr (current)</th><th>Pr (what-if)</th><th>RRL (current)</th><th>RRL (what-if)</th>" +
    "<th>RR baseline (current)</th><th>RR baseline (what-if)</th><th>RR vs current</th>" +
    `</tr></thead><tbody>${body}</tbody></table>`
  );
}

export function renderTrendChart(vm: TrendChartVM): string {
  const badge = `<span class="drift-badge drift-${esc(vm.verdict)}">${esc(vm.verdict)}</span>`;
  if (!vm.available) {
    return `<p class="empty-state">${esc(vm.placeholder ?? "no trend")}</p>${badge}`;
  }
  const dots = vm.points
    .map(
      (p) =>
        `<circle cx="${p.x.toFixed(2)}" cy="${p.y.toFixed(2)}" r="1.6"><title>${esc(p.label)}</title></circle>`,
    )
    .join("");
  const line = vm.line
    ? `<line x1="${vm.line.x1.toFixed(2)}" y1="${vm.line.y1.toFixed(2)}" ` +
      `x2="${vm.line.x2.toFixed(2)}" y2="${vm.line.y2.toFixed(2)}" class="trend-line"/>`
    : "";
  const slope = vm.slope ? `<p class="trend-slope">slope ${esc(vm.slope)} per exposure unit (RR vs ${esc(vm.reference)})</p>` : "";
  const labels = vm.labels.map((l) => esc(l)).join(" &rarr; ");
  return (
    `<svg viewBox="0 0 100 100" preserveAspectRatio="none" class="trend-chart">${line}${dots}</svg>` +
    `<p class="trend-values">RR: ${labels}</p>${slope}${badge}`
  );
}

export function renderStaleBanner(stale: boolean, error: string | null): string {
  if (!stale) {
    return "";
  }
  return `<div class="stale-banner">connection lost — showing the last snapshot (${esc(error ?? "unreachable")})</div>`;
}
