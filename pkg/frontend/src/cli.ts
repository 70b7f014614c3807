/**
 * Command line entry: render figures from training/evaluation CSVs.
 *
 *   commarl-plots learning-curves --label ndq --csv a.csv --csv b.csv \
 *       [--label base --csv c.csv ...] [--metric mean_test_return] --out fig.svg
 *   commarl-plots drop-sweep --csv sweep.csv [--metric mean_return] --out fig.svg
 *   commarl-plots message-means --csv summary.csv --threshold 2.0 --out fig.svg
 */

import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { readMetricsCsv, readSummaryCsv, readSweepCsv } from "./csv.js";
import type { MetricsRow } from "./csv.js";
import { plotDropSweep, plotLearningCurves, plotMessageMeans } from "./plots.js";
import type { CurveGroup } from "./plots.js";

function learningCurves(argv: string[]): string {
  const { values } = parseArgs({
    args: argv,
    options: {
      label: { type: "string", multiple: true },
      csv: { type: "string", multiple: true },
      metric: { type: "string", default: "mean_test_return" },
      out: { type: "string" },
    },
  });
  const labels = values.label ?? [];
  const csvs = values.csv ?? [];
  if (labels.length === 0 || csvs.length === 0) {
    throw new Error("need at least one --label and one --csv");
  }
  // each --csv attaches to the most recent --label; recover the pairing
  // from the original argv order
  const groups: CurveGroup[] = [];
  for (let k = 0; k < argv.length - 1; k += 1) {
    if (argv[k] === "--label") {
      groups.push({ label: argv[k + 1], runs: [] });
    } else if (argv[k] === "--csv") {
      if (groups.length === 0) throw new Error("--csv before any --label");
      groups[groups.length - 1].runs.push(readMetricsCsv(argv[k + 1]));
    }
  }
  return plotLearningCurves(groups, {
    metric: values.metric as keyof MetricsRow,
    warn: (m) => console.error(`warning: ${m}`),
  });
}

function dropSweep(argv: string[]): string {
  const { values } = parseArgs({
    args: argv,
    options: {
      csv: { type: "string" },
      metric: { type: "string", default: "mean_return" },
      out: { type: "string" },
    },
  });
  if (!values.csv) throw new Error("--csv is required");
  return plotDropSweep(readSweepCsv(values.csv),
    values.metric as "mean_return" | "win_rate" | "mean_step_reward");
}

function messageMeans(argv: string[]): string {
  const { values } = parseArgs({
    args: argv,
    options: {
      csv: { type: "string" },
      threshold: { type: "string", default: "2.0" },
      out: { type: "string" },
    },
  });
  if (!values.csv) throw new Error("--csv is required");
  const threshold = Number(values.threshold);
  if (!Number.isFinite(threshold) || threshold < 0) {
    throw new Error(`bad --threshold ${values.threshold}`);
  }
  return plotMessageMeans(readSummaryCsv(values.csv), threshold);
}

const COMMANDS: Record<string, (argv: string[]) => string> = {
  "learning-curves": learningCurves,
  "drop-sweep": dropSweep,
  "message-means": messageMeans,
};

export function run(argv: string[]): number {
  const [command, ...rest] = argv;
  const handler = command === undefined ? undefined : COMMANDS[command];
  if (!handler) {
    console.error(`usage: commarl-plots <${Object.keys(COMMANDS).join("|")}> ...`);
    return 2;
  }
  const outFlag = rest.indexOf("--out");
  const out = outFlag >= 0 ? rest[outFlag + 1] : undefined;
  if (!out) {
    console.error("--out <file.svg> is required");
    return 2;
  }
  try {
    writeFileSync(out, handler(rest));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  console.log(out);
  return 0;
}

const entry = process.argv[1] ? pathToFileURL(process.argv[1]).href : "";
if (import.meta.url === entry) {
  process.exit(run(process.argv.slice(2)));
}
