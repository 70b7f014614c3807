import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { run } from "../src/cli.js";
import { readMetricsCsv } from "../src/csv.js";
import { plotLearningCurves } from "../src/plots.js";
import { aggregateRuns, ciHalfWidth, mean } from "../src/stats.js";

const TESTDATA = join(dirname(fileURLToPath(import.meta.url)), "..", "testdata");
const SEED_CSVS = [0, 1, 2, 3, 4].map(
  (s) => join(TESTDATA, `sensor_metrics_seed${s}.csv`));
const out = mkdtempSync(join(tmpdir(), "plots-out-"));

describe("golden CSV rendering", () => {
  it("learning-curves command renders the committed seed CSVs", () => {
    const dest = join(out, "curves.svg");
    const argv = ["learning-curves", "--label", "sensor"];
    for (const csv of SEED_CSVS) argv.push("--csv", csv);
    argv.push("--out", dest);
    expect(run(argv)).toBe(0);
    const svg = readFileSync(dest, "utf8");
    expect(svg).toContain("<svg");
    expect(svg).toContain("polygon"); // the confidence band
  });

  it("drop-sweep command renders the committed sweep CSV", () => {
    const dest = join(out, "sweep.svg");
    expect(run(["drop-sweep", "--csv", join(TESTDATA, "hallway_sweep.csv"),
      "--metric", "win_rate", "--out", dest])).toBe(0);
    expect(readFileSync(dest, "utf8")).toContain("polyline");
  });

  it("message-means command renders the committed summary CSV", () => {
    const dest = join(out, "means.svg");
    expect(run(["message-means",
      "--csv", join(TESTDATA, "sensor_message_summary.csv"),
      "--threshold", "2.0", "--out", dest])).toBe(0);
    expect(readFileSync(dest, "utf8")).toContain("threshold 2");
    expect(existsSync(dest)).toBe(true);
  });

  it("band over the committed seeds matches hand-computed mean +/- 1.96*se", () => {
    const runs = SEED_CSVS.map(readMetricsCsv);
    const band = aggregateRuns(runs, "mean_test_return");
    expect(band.length).toBeGreaterThan(0);
    for (const point of band) {
      const values = runs.map((rows) =>
        rows.find((r) => r.env_steps === point.x)!.mean_test_return);
      const m = mean(values);
      const hw = ciHalfWidth(values);
      expect(point.mean).toBeCloseTo(m, 9);
      expect(point.low).toBeCloseTo(m - hw, 9);
      expect(point.high).toBeCloseTo(m + hw, 9);
    }
  });
});

describe("rendering behavior", () => {
  it("is deterministic for identical inputs", () => {
    const runs = SEED_CSVS.map(readMetricsCsv);
    const groups = [{ label: "sensor", runs }];
    const silent = { warn: () => {} };
    expect(plotLearningCurves(groups, silent))
      .toBe(plotLearningCurves(groups, silent));
  });

  it("warns and skips the band with a single seed", () => {
    const warnings: string[] = [];
    const svg = plotLearningCurves(
      [{ label: "solo", runs: [readMetricsCsv(SEED_CSVS[0])] }],
      { warn: (m) => warnings.push(m) });
    expect(warnings.some((w) => w.includes("single seed"))).toBe(true);
    expect(svg).not.toContain("polygon");
  });

  it("CLI reports bad inputs without writing a file", () => {
    const dest = join(out, "never.svg");
    expect(run(["drop-sweep", "--csv", join(TESTDATA, "nope.csv"),
      "--out", dest])).toBe(1);
    expect(existsSync(dest)).toBe(false);
    expect(run(["unknown-command", "--out", dest])).toBe(2);
  });
});
