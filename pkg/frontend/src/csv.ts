/**
 * Schema-checked readers for the CSV artifacts emitted by the training
 * and evaluation tools: per-run metrics, drop-rate sweeps, and
 * per-channel message summaries.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export interface MetricsRow {
  env_steps: number;
  mean_test_return: number;
  test_win_rate: number;
  mean_episode_len: number;
  loss_total: number;
  loss_td: number;
  loss_ce: number;
  loss_kl: number;
  grad_norm: number;
  eps: number;
  by_message_drop_rate: number;
  by_bit_drop_rate: number;
  seed: number;
}

export interface SweepRow {
  rate: number;
  scope: string;
  threshold: number;
  mean_return: number;
  mean_step_reward: number;
  win_rate: number;
  mean_episode_len: number;
  by_message_drop_rate: number;
  by_bit_drop_rate: number;
  bits_sent_total: number;
}

export interface SummaryRow {
  i: number;
  j: number;
  bit: number;
  mean_abs_mu: number;
  frac_above_threshold: number;
}

export const METRICS_COLUMNS: (keyof MetricsRow)[] = [
  "env_steps", "mean_test_return", "test_win_rate", "mean_episode_len",
  "loss_total", "loss_td", "loss_ce", "loss_kl", "grad_norm", "eps",
  "by_message_drop_rate", "by_bit_drop_rate", "seed",
];

export const SWEEP_COLUMNS: (keyof SweepRow)[] = [
  "rate", "scope", "threshold", "mean_return", "mean_step_reward", "win_rate",
  "mean_episode_len", "by_message_drop_rate", "by_bit_drop_rate",
  "bits_sent_total",
];

export const SUMMARY_COLUMNS: (keyof SummaryRow)[] = [
  "i", "j", "bit", "mean_abs_mu", "frac_above_threshold",
];

function parseTable(path: string, columns: string[]): Record<string, string>[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new Error(`${path}: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of columns) {
    if (!fields.includes(column)) {
      throw new Error(`${path}: missing column "${column}"`);
    }
  }
  return parsed.data;
}

function num(row: Record<string, string>, key: string, path: string): number {
  const value = Number(row[key]);
  if (!Number.isFinite(value)) {
    throw new Error(`${path}: non-numeric value "${row[key]}" in column "${key}"`);
  }
  return value;
}

export function readMetricsCsv(path: string): MetricsRow[] {
  return parseTable(path, METRICS_COLUMNS).map((row) =>
    Object.fromEntries(
      METRICS_COLUMNS.map((key) => [key, num(row, key, path)]),
    ) as unknown as MetricsRow,
  );
}

export function readSweepCsv(path: string): SweepRow[] {
  const rows = parseTable(path, SWEEP_COLUMNS).map((row) => ({
    ...(Object.fromEntries(
      SWEEP_COLUMNS.filter((key) => key !== "scope")
        .map((key) => [key, num(row, key, path)]),
    ) as unknown as Omit<SweepRow, "scope">),
    scope: row.scope,
  }));
  if (rows.length === 0) {
    throw new Error(`${path}: empty sweep`);
  }
  return rows;
}

export function readSummaryCsv(path: string): SummaryRow[] {
  const rows = parseTable(path, SUMMARY_COLUMNS).map((row) =>
    Object.fromEntries(
      SUMMARY_COLUMNS.map((key) => [key, num(row, key, path)]),
    ) as unknown as SummaryRow,
  );
  if (rows.length === 0) {
    throw new Error(`${path}: empty summary`);
  }
  return rows;
}
