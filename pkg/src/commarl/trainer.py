"""End-to-end training loop.

Synchronous runner pool (each runner owns one env instance), episode
replay buffer, RMSprop optimization of the total loss, periodic target
sync, periodic greedy evaluation with metric logging, checkpointing.
Deterministic for a fixed seed and runner count.
"""

from __future__ import annotations

import copy
import csv
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from .buffer import ReplayBuffer, to_batch
from .comm import CutPolicy
from .envs import make_env
from .evaluate import DEFAULT_EVAL_EPISODES, evaluate
from .losses import Hyperparams, LossReport, epsilon_at, total_loss
from .model import ModelSpec, ParamStore, save_checkpoint
from .rollout import collect_episodes

METRICS_COLUMNS = [
    "env_steps", "mean_test_return", "test_win_rate", "mean_episode_len",
    "loss_total", "loss_td", "loss_ce", "loss_kl", "grad_norm", "eps",
    "by_message_drop_rate", "by_bit_drop_rate", "seed",
]


@dataclass
class TrainConfig:
    env_name: str = "sensor"
    env_kwargs: dict = field(default_factory=dict)
    hyper: Hyperparams = field(default_factory=Hyperparams)
    total_env_steps: int = 2_000_000
    n_parallel_runners: int = 16
    buffer_capacity: int = 5000
    eval_interval: int = 50_000       # env steps between evaluations
    eval_episodes: int = DEFAULT_EVAL_EPISODES
    seed: int = 0
    out_dir: str = "runs/default"
    train_cut_threshold: float | None = None  # ablation: threshold-cut during rollouts
    early_stop_patience: int = 0      # eval points without improvement; 0 = off
    early_stop_min_steps: int = 0
    checkpoint_every_evals: int = 0   # 0 = only initial + final checkpoints
    torch_threads: int = 1

    def __post_init__(self):
        for name in ("total_env_steps",):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("n_parallel_runners", "buffer_capacity", "eval_interval",
                     "eval_episodes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")


def sync_target(store: ParamStore) -> ParamStore:
    """Copy the live (agent, mixer, encoder) parameters into the targets."""
    store.sync_target()
    return store


def model_spec_for(config: TrainConfig) -> ModelSpec:
    env_spec = make_env(config.env_name, **config.env_kwargs).env_info()
    return ModelSpec(
        n_agents=env_spec.n_agents, n_actions=env_spec.n_actions,
        obs_dim=env_spec.obs_dim, state_dim=env_spec.state_dim,
        msg_len=config.hyper.msg_len,
    )


def checkpoint_metadata(config: TrainConfig, env_steps: int) -> dict:
    return {
        "env_name": config.env_name,
        "env_kwargs": dict(config.env_kwargs),
        "hyper": vars(copy.deepcopy(config.hyper)),
        "env_steps": env_steps,
        "seed": config.seed,
    }


class MetricsWriter:
    def __init__(self, path):
        self.path = path
        self._file = open(path, "w", newline="")
        self._writer = csv.writer(self._file)
        self._writer.writerow(METRICS_COLUMNS)
        self._file.flush()

    def write(self, row: dict) -> None:
        self._writer.writerow([repr(row[c]) if isinstance(row[c], float) else row[c]
                               for c in METRICS_COLUMNS])
        self._file.flush()

    def close(self):
        self._file.close()


def train(config: TrainConfig, store: ParamStore | None = None) -> dict:
    """Run training; returns paths to the emitted artifacts.

    Loop: collect one episode per runner, append to the buffer, then run
    one batch update per collected episode, sync targets periodically,
    evaluate periodically.  Early-stops on an evaluation-return plateau when
    `early_stop_patience` is set.
    """
    torch.set_num_threads(config.torch_threads)
    os.makedirs(config.out_dir, exist_ok=True)
    hyper = config.hyper
    spec = model_spec_for(config)
    if store is None:
        store = ParamStore(spec, seed=config.seed)

    rng = np.random.default_rng(config.seed)
    noise_gen = torch.Generator()
    noise_gen.manual_seed(config.seed)

    envs = [make_env(config.env_name, **config.env_kwargs)
            for _ in range(config.n_parallel_runners)]
    eval_factory = lambda: make_env(config.env_name, **config.env_kwargs)
    buffer = ReplayBuffer(config.buffer_capacity)
    optimizer = torch.optim.RMSprop(store.parameters(), lr=hyper.lr,
                                    alpha=0.99, eps=1e-5)
    cut_policy = None
    if config.train_cut_threshold is not None:
        cut_policy = CutPolicy(mode="threshold", threshold=config.train_cut_threshold)

    metrics = MetricsWriter(os.path.join(config.out_dir, "metrics.csv"))
    checkpoints = {0: os.path.join(config.out_dir, "checkpoint_0.pt")}
    save_checkpoint(checkpoints[0], store, checkpoint_metadata(config, 0))

    env_steps = 0
    updates = 0
    evals_done = 0
    best_return = -np.inf
    best_kl = np.inf
    evals_since_best = 0
    kl_accum = 0.0
    kl_count = 0
    last_report = LossReport(0.0, 0.0, 0.0, 0.0, 0.0)

    def run_eval():
        nonlocal evals_done, best_return, best_kl, evals_since_best
        nonlocal kl_accum, kl_count
        eval_metrics = evaluate(store, eval_factory, config.eval_episodes,
                                cut_policy=None, seed=config.seed + 7919 * (evals_done + 1))
        metrics.write({
            "env_steps": env_steps,
            "mean_test_return": eval_metrics["mean_return"],
            "test_win_rate": eval_metrics["win_rate"],
            "mean_episode_len": eval_metrics["mean_episode_len"],
            "loss_total": last_report.total,
            "loss_td": last_report.td,
            "loss_ce": last_report.expressiveness,
            "loss_kl": last_report.succinctness,
            "grad_norm": last_report.grad_norm,
            "eps": epsilon_at(hyper, env_steps),
            "by_message_drop_rate": eval_metrics["by_message_drop_rate"],
            "by_bit_drop_rate": eval_metrics["by_bit_drop_rate"],
            "seed": config.seed,
        })
        evals_done += 1
        if config.checkpoint_every_evals and evals_done % config.checkpoint_every_evals == 0:
            path = os.path.join(config.out_dir, f"checkpoint_{env_steps}.pt")
            checkpoints[env_steps] = path
            save_checkpoint(path, store, checkpoint_metadata(config, env_steps))
        # a run still counts as improving while either the evaluation
        # return rises or the succinctness term keeps shrinking (the
        # channel is still being pruned after performance converges)
        improved = False
        if eval_metrics["mean_return"] > best_return + 1e-9:
            best_return = eval_metrics["mean_return"]
            improved = True
        avg_kl = kl_accum / kl_count if kl_count else 0.0
        kl_accum = 0.0
        kl_count = 0
        if not np.isfinite(best_kl) or avg_kl < best_kl - 0.02 * abs(best_kl):
            best_kl = avg_kl
            improved = True
        evals_since_best = 0 if improved else evals_since_best + 1

    next_eval = config.eval_interval
    stopped_early = False
    while env_steps < config.total_env_steps:
        eps = epsilon_at(hyper, env_steps)
        seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=len(envs))]
        episodes = collect_episodes(envs, store, seeds, eps, rng, noise_gen,
                                    cut_policy=cut_policy, sample_messages=True)
        buffer.extend(episodes)
        env_steps += sum(ep.length for ep in episodes)

        if len(buffer) >= hyper.batch_size:
            # one gradient update per collected episode, so the
            # update-to-data ratio does not depend on the runner count
            for _ in range(len(episodes)):
                batch = to_batch(buffer.sample(hyper.batch_size, rng))
                loss, report = total_loss(batch, store, hyper, noise_gen)
                optimizer.zero_grad()
                loss.backward()
                grad_norm = torch.nn.utils.clip_grad_norm_(
                    list(store.parameters()), hyper.grad_norm_clip)
                optimizer.step()
                report.grad_norm = float(grad_norm)
                last_report = report
                kl_accum += report.succinctness
                kl_count += 1
                updates += 1
                if updates % hyper.target_sync_interval == 0:
                    sync_target(store)

        if env_steps >= next_eval:
            run_eval()
            next_eval += config.eval_interval
            if (config.early_stop_patience
                    and env_steps >= config.early_stop_min_steps
                    and evals_since_best >= config.early_stop_patience):
                stopped_early = True
                break

    if config.total_env_steps > 0 and evals_done == 0:
        run_eval()
    final_path = os.path.join(config.out_dir, f"checkpoint_{env_steps}.pt")
    save_checkpoint(final_path, store, checkpoint_metadata(config, env_steps))
    checkpoints[env_steps] = final_path
    metrics.close()
    return {
        "metrics_csv": metrics.path,
        "checkpoints": checkpoints,
        "final_checkpoint": final_path,
        "env_steps": env_steps,
        "updates": updates,
        "stopped_early": stopped_early,
    }
