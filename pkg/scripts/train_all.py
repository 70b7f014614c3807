"""Train every committed experiment config into artifacts/.

Runs sequentially (one core), resumable: a run with a DONE marker in its
output directory is skipped.  Baseline (no-communication) runs enable
early stopping via overrides, not in the golden configs, to keep total
wall time reasonable: they may halt once evaluation has plateaued for 8
evaluation points after at least 400k env steps.
"""

import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from commarl.cli import run  # noqa: E402

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))

# baseline (no-communication) runs plateau quickly and may early-stop;
# communication runs train their full step budget because channel
# pruning continues long after the return converges
EARLY_STOP = [
    "train.early_stop_patience=8",
    "train.early_stop_min_steps=400000",
]

RUNS = [
    ("sensor", "configs/sensor.yaml", [0, 1, 2, 3, 4], []),
    ("sensor_no_comm", "configs/sensor_no_comm.yaml", [0, 1, 2, 3, 4], EARLY_STOP),
    ("hallway", "configs/hallway.yaml", [0, 1, 2, 3, 4], []),
    ("hallway_no_comm", "configs/hallway_no_comm.yaml", [0, 1, 2, 3, 4], EARLY_STOP),
    ("sensor_beta_1", "configs/sensor_beta_1.yaml", [0], []),
    ("sensor_beta_1e-5", "configs/sensor_beta_1e-5.yaml", [0], []),
    ("search", "configs/search.yaml", [0], []),
]


def main() -> int:
    failures = []
    for name, config, seeds, overrides in RUNS:
        for seed in seeds:
            out_dir = os.path.join(ROOT, "artifacts", name, f"seed_{seed}")
            marker = os.path.join(out_dir, "DONE")
            if os.path.exists(marker):
                print(f"[skip] {name} seed {seed}", flush=True)
                continue
            argv = ["train", "--config", os.path.join(ROOT, config),
                    "--seed", str(seed), "--out-dir", out_dir]
            for override in overrides:
                argv += ["--override", override]
            print(f"[run ] {name} seed {seed}", flush=True)
            start = time.time()
            code = run(argv)
            minutes = (time.time() - start) / 60.0
            if code == 0:
                with open(marker, "w") as f:
                    f.write("ok\n")
                print(f"[done] {name} seed {seed} in {minutes:.1f} min", flush=True)
            else:
                failures.append((name, seed, code))
                print(f"[FAIL] {name} seed {seed} exit {code}", flush=True)
    if failures:
        print(f"{len(failures)} runs failed: {failures}", flush=True)
        return 1
    print("all runs complete", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
