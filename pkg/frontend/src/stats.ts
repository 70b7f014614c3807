/** Seed-wise curve aggregation: mean line and 95% confidence band. */

import type { MetricsRow } from "./csv.js";

export function mean(values: number[]): number {
  return values.reduce((a, b) => a + b, 0) / values.length;
}

/** Sample standard deviation (ddof = 1); 0 for a single value. */
export function sampleStd(values: number[]): number {
  if (values.length < 2) return 0;
  const m = mean(values);
  const ss = values.reduce((a, v) => a + (v - m) * (v - m), 0);
  return Math.sqrt(ss / (values.length - 1));
}

/** 95% CI half-width: 1.96 * std / sqrt(n). */
export function ciHalfWidth(values: number[]): number {
  return 1.96 * sampleStd(values) / Math.sqrt(values.length);
}

export interface BandPoint {
  x: number;
  mean: number;
  low: number;
  high: number;
}

/**
 * Aggregate one metric over several seed runs at the env-step points
 * shared by every run (runs stopped early contribute their prefix).
 */
export function aggregateRuns(
  runs: MetricsRow[][],
  metric: keyof MetricsRow,
): BandPoint[] {
  if (runs.length === 0) {
    throw new Error("no runs to aggregate");
  }
  let shared: number[] | null = null;
  for (const run of runs) {
    const steps = run.map((row) => row.env_steps);
    shared = shared === null ? steps : shared.filter((s) => steps.includes(s));
  }
  if (shared === null || shared.length === 0) {
    throw new Error("runs share no env_steps evaluation points");
  }
  return shared.map((x) => {
    const values = runs.map((run) => {
      const row = run.find((r) => r.env_steps === x)!;
      return row[metric] as number;
    });
    const m = mean(values);
    const hw = ciHalfWidth(values);
    return { x, mean: m, low: m - hw, high: m + hw };
  });
}
