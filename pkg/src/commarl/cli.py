"""Command-line entry point.

Subcommands: train, eval, sweep-drop, dump-messages, oracle, solve.
Exit codes: 0 success, 2 configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import torch

from .comm import BY_BIT, BY_MESSAGE, CutPolicy
from .config import (ConfigError, apply_overrides, build_train_config,
                     load_config_file, write_resolved_config)
from .envs import make_env
from .evaluate import dump_messages, evaluate, sweep_drop, write_sweep_csv
from .model import load_checkpoint
from .oracle import run_oracle_suite, solve_hallway_optimal, solve_sensor_optimal
from .trainer import train

DUMP_THRESHOLD_DEFAULTS = {"sensor": 2.0, "hallway": 3.0}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="commarl")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--override", action="append", default=[],
                       metavar="SECTION.KEY=VALUE")

    p_train = sub.add_parser("train", help="train a model from a config file")
    p_train.add_argument("--config", required=True)
    common(p_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--episodes", type=int, default=48)
    p_eval.add_argument("--cut-mode", choices=["none", "threshold", "drop-rate"],
                        default="none")
    p_eval.add_argument("--threshold", type=float, default=0.0)
    p_eval.add_argument("--rate", type=float, default=0.0)
    p_eval.add_argument("--scope", choices=["bits", "messages"], default="bits")
    common(p_eval)

    p_sweep = sub.add_parser("sweep-drop", help="evaluate across drop rates")
    p_sweep.add_argument("--checkpoint", required=True)
    p_sweep.add_argument("--rates", required=True,
                         help="comma-separated drop rates, e.g. 0,0.2,0.8,1.0")
    p_sweep.add_argument("--scope", choices=["bits", "messages"], default="bits")
    p_sweep.add_argument("--episodes", type=int, default=48)
    common(p_sweep)

    p_dump = sub.add_parser("dump-messages", help="dump message means/values to CSV")
    p_dump.add_argument("--checkpoint", required=True)
    p_dump.add_argument("--episodes", type=int, default=48)
    p_dump.add_argument("--threshold", type=float, default=None)
    common(p_dump)

    p_oracle = sub.add_parser("oracle", help="run the independent verifier suite")
    p_oracle.add_argument("--seed", type=int, default=0)

    p_solve = sub.add_parser("solve", help="print optimal task values")
    p_solve.add_argument("--env", choices=["sensor", "hallway", "all"], default="all")

    return parser


def _load(args):
    store, meta = load_checkpoint(args.checkpoint)
    env_factory = lambda: make_env(meta["env_name"], **meta["env_kwargs"])
    return store, meta, env_factory


def _scope(flag: str) -> str:
    return BY_MESSAGE if flag == "messages" else BY_BIT


def _out_dir(args) -> str:
    out = args.out_dir or "."
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_train(args) -> int:
    raw = apply_overrides(load_config_file(args.config), args.override)
    config = build_train_config(raw, seed=args.seed, out_dir=args.out_dir)
    os.makedirs(config.out_dir, exist_ok=True)
    write_resolved_config(config, os.path.join(config.out_dir, "resolved_config.yaml"))
    artifacts = train(config)
    print(f"trained {artifacts['env_steps']} env steps "
          f"({artifacts['updates']} updates)"
          + (" [early stop]" if artifacts["stopped_early"] else ""))
    print(f"metrics: {artifacts['metrics_csv']}")
    print(f"final checkpoint: {artifacts['final_checkpoint']}")
    return 0


def _cmd_eval(args) -> int:
    store, meta, env_factory = _load(args)
    seed = args.seed if args.seed is not None else 0
    if args.cut_mode == "none":
        policy = None
    elif args.cut_mode == "threshold":
        policy = CutPolicy(mode="threshold", threshold=args.threshold,
                           rate_scope=_scope(args.scope))
    else:
        from .evaluate import calibrated_policy
        policy = calibrated_policy(store, env_factory, args.rate,
                                   _scope(args.scope), seed=seed)
    metrics = evaluate(store, env_factory, args.episodes, policy, seed=seed)
    for key, value in metrics.items():
        print(f"{key}: {value}")
    return 0


def _cmd_sweep(args) -> int:
    store, meta, env_factory = _load(args)
    rates = [float(r) for r in args.rates.split(",") if r.strip() != ""]
    seed = args.seed if args.seed is not None else 0
    rows = sweep_drop(store, env_factory, rates, _scope(args.scope),
                      n_episodes=args.episodes, seed=seed)
    path = os.path.join(_out_dir(args), "sweep.csv")
    write_sweep_csv(rows, path)
    for row in rows:
        print(f"rate={row['rate']:.2f} scope={row['scope']} "
              f"mean_return={row['mean_return']:.3f} win_rate={row['win_rate']:.3f} "
              f"by_bit_drop={row['by_bit_drop_rate']:.3f}")
    print(f"sweep csv: {path}")
    return 0


def _cmd_dump(args) -> int:
    store, meta, env_factory = _load(args)
    threshold = args.threshold
    if threshold is None:
        threshold = DUMP_THRESHOLD_DEFAULTS.get(meta["env_name"], 2.0)
    out = _out_dir(args)
    dump_path = os.path.join(out, "messages.csv")
    summary_path = os.path.join(out, "message_summary.csv")
    seed = args.seed if args.seed is not None else 0
    _, summary = dump_messages(store, env_factory, args.episodes, threshold,
                               dump_path, summary_path, seed=seed)
    for row in summary:
        print(f"{row['i']}->{row['j']} bit {row['bit']}: "
              f"mean|mu|={row['mean_abs_mu']:.3f} "
              f"frac>={threshold}: {row['frac_above_threshold']:.3f}")
    print(f"dump: {dump_path}\nsummary: {summary_path}")
    return 0


def _cmd_oracle(args) -> int:
    results = run_oracle_suite(seed=args.seed)
    width = max(len(name) for name, _, _ in results)
    ok = True
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        print(f"{name.ljust(width)}  {status}  {detail}")
        ok = ok and passed
    return 0 if ok else 1


def _cmd_solve(args) -> int:
    if args.env in ("sensor", "all"):
        print(f"sensor optimal per-step reward: {solve_sensor_optimal()}")
    if args.env in ("hallway", "all"):
        win, length = solve_hallway_optimal()
        print(f"hallway optimal win probability: {win}, mean episode length: {length}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep-drop": _cmd_sweep,
    "dump-messages": _cmd_dump,
    "oracle": _cmd_oracle,
    "solve": _cmd_solve,
}


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
