/**
 * The three figures: learning curves with seed-wise confidence bands,
 * performance vs message drop rate, and per-channel per-bit message
 * mean magnitudes against the cutting threshold.
 */

import type { MetricsRow, SummaryRow, SweepRow } from "./csv.js";
import { aggregateRuns, type BandPoint } from "./stats.js";
import * as svg from "./svg.js";

export interface CurveGroup {
  label: string;
  runs: MetricsRow[][];
}

export interface LearningCurveOptions {
  metric?: keyof MetricsRow;
  warn?: (message: string) => void;
}

export function plotLearningCurves(
  groups: CurveGroup[],
  options: LearningCurveOptions = {},
): string {
  if (groups.length === 0) throw new Error("no curve groups given");
  const metric = options.metric ?? "mean_test_return";
  const warn = options.warn ?? ((m) => console.warn(m));

  const bands = new Map<string, BandPoint[]>();
  for (const group of groups) {
    if (group.runs.length === 1) {
      warn(`label "${group.label}": single seed, drawing line without band`);
    }
    bands.set(group.label, aggregateRuns(group.runs, metric));
  }

  const allPoints = [...bands.values()].flat();
  const x = svg.linearScale(
    svg.extent(allPoints.map((p) => p.x), 0),
    [svg.MARGIN.left, svg.WIDTH - svg.MARGIN.right]);
  const y = svg.linearScale(
    svg.extent(allPoints.flatMap((p) => [p.low, p.high])),
    [svg.HEIGHT - svg.MARGIN.bottom, svg.MARGIN.top]);

  const parts = [svg.axes(x, y, "env steps", String(metric))];
  groups.forEach((group, k) => {
    const color = svg.PALETTE[k % svg.PALETTE.length];
    const band = bands.get(group.label)!;
    if (group.runs.length > 1) {
      parts.push(svg.bandPolygon(
        band.map((p) => [x(p.x), y(p.high)]),
        band.map((p) => [x(p.x), y(p.low)]),
        color));
    }
    parts.push(svg.polyline(band.map((p) => [x(p.x), y(p.mean)]), color));
  });
  parts.push(svg.legend(
    groups.map((g) => g.label),
    groups.map((_, k) => svg.PALETTE[k % svg.PALETTE.length])));
  return svg.document("Learning curves (mean over seeds, 95% CI)",
    parts.join("\n"));
}

export function plotDropSweep(
  rows: SweepRow[],
  metric: "mean_return" | "win_rate" | "mean_step_reward" = "mean_return",
): string {
  if (rows.length === 0) throw new Error("empty sweep");
  const scopes = [...new Set(rows.map((r) => r.scope))].sort();
  const x = svg.linearScale([0, 1],
    [svg.MARGIN.left, svg.WIDTH - svg.MARGIN.right]);
  const y = svg.linearScale(
    svg.extent(rows.map((r) => r[metric])),
    [svg.HEIGHT - svg.MARGIN.bottom, svg.MARGIN.top]);

  const parts = [svg.axes(x, y, "target drop rate", metric)];
  scopes.forEach((scope, k) => {
    const color = svg.PALETTE[k % svg.PALETTE.length];
    const pts = rows.filter((r) => r.scope === scope)
      .sort((a, b) => a.rate - b.rate)
      .map((r): [number, number] => [x(r.rate), y(r[metric])]);
    parts.push(svg.polyline(pts, color));
    for (const [px, py] of pts) {
      parts.push(`<circle cx="${svg.fmt(px)}" cy="${svg.fmt(py)}" r="3" fill="${color}"/>`);
    }
  });
  parts.push(svg.legend(scopes, scopes.map(
    (_, k) => svg.PALETTE[k % svg.PALETTE.length])));
  return svg.document("Performance vs message drop rate", parts.join("\n"));
}

export function plotMessageMeans(rows: SummaryRow[], threshold: number): string {
  if (rows.length === 0) throw new Error("empty summary");
  const sorted = [...rows].sort(
    (a, b) => a.i - b.i || a.j - b.j || a.bit - b.bit);
  const x = svg.linearScale([0, sorted.length],
    [svg.MARGIN.left, svg.WIDTH - svg.MARGIN.right]);
  const y = svg.linearScale(
    [0, Math.max(threshold, ...sorted.map((r) => r.mean_abs_mu)) * 1.1 || 1],
    [svg.HEIGHT - svg.MARGIN.bottom, svg.MARGIN.top]);

  const parts = [svg.axes(x, y, "channel / bit", "mean |mu|")];
  const y0 = svg.HEIGHT - svg.MARGIN.bottom;
  sorted.forEach((row, k) => {
    const left = x(k + 0.15);
    const width = x(k + 0.85) - left;
    const top = y(row.mean_abs_mu);
    const color = svg.PALETTE[(row.i * 7 + row.j) % svg.PALETTE.length];
    parts.push(`<rect x="${svg.fmt(left)}" y="${svg.fmt(top)}" width="${svg.fmt(width)}" height="${svg.fmt(y0 - top)}" fill="${color}"/>`);
    parts.push(`<text x="${svg.fmt(x(k + 0.5))}" y="${y0 + 14}" font-size="9" text-anchor="middle">${row.i}-${row.j}/${row.bit}</text>`);
  });
  const ty = svg.fmt(y(threshold));
  parts.push(`<line x1="${svg.MARGIN.left}" y1="${ty}" x2="${svg.WIDTH - svg.MARGIN.right}" y2="${ty}" stroke="#d62728" stroke-dasharray="5,3"/>`);
  parts.push(`<text x="${svg.WIDTH - svg.MARGIN.right}" y="${svg.fmt(y(threshold) - 5)}" font-size="11" text-anchor="end" fill="#d62728">threshold ${svg.fmt(threshold)}</text>`);
  return svg.document("Per-channel message mean magnitudes", parts.join("\n"));
}
