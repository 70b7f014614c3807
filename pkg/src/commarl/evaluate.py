"""Test-time evaluation, drop-rate sweeps, and message-distribution dumps."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import torch

from .comm import (BY_BIT, BY_MESSAGE, CutPolicy, MessageRecord,
                   calibrate_threshold, drop_stats, write_message_dump)
from .model import ParamStore
from .rollout import collect_episodes

DEFAULT_EVAL_EPISODES = 48


def _eval_seeds(seed: int, n: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, np.uint64)]


def run_greedy_episodes(store: ParamStore, env_factory, n_episodes: int, seed: int,
                        cut_policy: CutPolicy | None = None,
                        sample_messages: bool = False):
    """Greedy (eps=0) episodes with a seeded noise stream."""
    envs = [env_factory() for _ in range(n_episodes)]
    gen = torch.Generator()
    gen.manual_seed(seed)
    rng = np.random.default_rng(seed)
    return collect_episodes(
        envs, store, seeds=_eval_seeds(seed, n_episodes), eps=0.0,
        action_rng=rng, noise_generator=gen, cut_policy=cut_policy,
        sample_messages=sample_messages,
    )


def summarize_episodes(episodes) -> dict:
    returns = np.array([ep.ret for ep in episodes])
    lengths = np.array([ep.length for ep in episodes])
    masks = np.concatenate([ep.masks.reshape(-1, ep.masks.shape[-1])
                            for ep in episodes]) if episodes[0].masks.size else np.zeros((0, 0))
    by_msg, by_bit, bits_sent = drop_stats(masks) if masks.size else (0.0, 0.0, 0)
    return {
        "mean_return": float(returns.mean()),
        "mean_step_reward": float((returns / lengths).mean()),
        "win_rate": float(np.mean([ep.won for ep in episodes])),
        "mean_episode_len": float(lengths.mean()),
        "by_message_drop_rate": by_msg,
        "by_bit_drop_rate": by_bit,
        "bits_sent_total": bits_sent,
    }


def evaluate(store: ParamStore, env_factory, n_episodes: int = DEFAULT_EVAL_EPISODES,
             cut_policy: CutPolicy | None = None, seed: int = 0,
             sample_messages: bool = False) -> dict:
    """Greedy-policy metrics under an optional message cut policy."""
    spec = env_factory().env_info()
    if spec.n_agents != store.spec.n_agents or spec.obs_dim != store.spec.obs_dim:
        raise ValueError("checkpoint and environment specs do not match")
    episodes = run_greedy_episodes(store, env_factory, n_episodes, seed,
                                   cut_policy, sample_messages)
    return summarize_episodes(episodes)


def pool_mean_magnitudes(store: ParamStore, env_factory, n_episodes: int,
                         seed: int) -> tuple[np.ndarray, np.ndarray]:
    """|mean| samples from uncut calibration rollouts.

    Returns (per-bit |mu| pooled over all channels/steps, per-message
    max-|mu| pooled the same way).
    """
    episodes = run_greedy_episodes(store, env_factory, n_episodes, seed)
    mags = np.concatenate([np.abs(ep.means).reshape(-1, ep.means.shape[-1])
                           for ep in episodes])
    return mags.ravel(), mags.max(axis=1)


def calibrated_policy(store: ParamStore, env_factory, rate: float, scope: str,
                      calibration_episodes: int = 100, seed: int = 0) -> CutPolicy:
    """Cut policy whose threshold hits a target drop rate on this task."""
    bits, per_message = pool_mean_magnitudes(store, env_factory,
                                             calibration_episodes, seed)
    samples = per_message if scope == BY_MESSAGE else bits
    threshold = calibrate_threshold(samples, rate, scope)
    return CutPolicy(mode="drop-rate", threshold=threshold,
                     target_drop_rate=rate, rate_scope=scope)


def sweep_drop(store: ParamStore, env_factory, rates, scope: str = BY_BIT,
               n_episodes: int = DEFAULT_EVAL_EPISODES,
               calibration_episodes: int = 100, seed: int = 0) -> list[dict]:
    """One calibration pass, then one evaluation per drop rate.

    Output rows are sorted by rate regardless of input order.
    """
    bits, per_message = pool_mean_magnitudes(store, env_factory,
                                             calibration_episodes, seed)
    samples = per_message if scope == BY_MESSAGE else bits
    rows = []
    for rate in sorted(float(r) for r in rates):
        if not 0.0 <= rate <= 1.0:
            raise ValueError(f"drop rate {rate} outside [0, 1]")
        policy = CutPolicy(mode="drop-rate",
                           threshold=calibrate_threshold(samples, rate, scope),
                           target_drop_rate=rate, rate_scope=scope)
        metrics = evaluate(store, env_factory, n_episodes, policy, seed)
        rows.append({"rate": rate, "scope": scope,
                     "threshold": policy.threshold} | metrics)
    return rows


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def dump_messages(store: ParamStore, env_factory, n_episodes: int,
                  threshold: float, dump_path=None, summary_path=None,
                  seed: int = 0) -> tuple[list[MessageRecord], list[dict]]:
    """Raw per-(episode, t, i, j) message dump plus per-channel-bit summary.

    The summary reports, for each ordered channel i->j and bit, the mean
    |mu| and the fraction of steps with |mu| >= threshold.
    """
    episodes = run_greedy_episodes(store, env_factory, n_episodes, seed)
    n = store.spec.n_agents
    msg_len = store.spec.msg_len
    records = []
    for e, ep in enumerate(episodes):
        for t in range(ep.length):
            for i in range(n):
                for r in range(n - 1):
                    j = r + (1 if r >= i else 0)
                    means = ep.means[t, i, r]
                    mask = np.abs(means) >= threshold
                    records.append(MessageRecord(
                        episode=e, t=t, sender=i, recipient=j,
                        means=means, mask=mask,
                        values=np.where(mask, ep.values[t, i, r], 0.0)))

    summary = []
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            chan = np.stack([r.means for r in records
                             if r.sender == i and r.recipient == j])
            for b in range(msg_len):
                mags = np.abs(chan[:, b])
                summary.append({
                    "i": i, "j": j, "bit": b,
                    "mean_abs_mu": float(mags.mean()),
                    "frac_above_threshold": float((mags >= threshold).mean()),
                })
    if dump_path is not None:
        write_message_dump(records, dump_path)
    if summary_path is not None:
        with open(summary_path, "w", newline="") as f:
            writer = csv.DictWriter(
                f, fieldnames=["i", "j", "bit", "mean_abs_mu", "frac_above_threshold"])
            writer.writeheader()
            writer.writerows(summary)
    return records, summary


@dataclass
class SeedStats:
    mean: float
    half_width: float  # 1.96 * std / sqrt(n), the 95% CI half-width

    @property
    def low(self) -> float:
        return self.mean - self.half_width

    @property
    def high(self) -> float:
        return self.mean + self.half_width


def seed_ci(values) -> SeedStats:
    """Mean and 95% CI half-width over per-seed scalars."""
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return SeedStats(mean=float(values.mean()), half_width=0.0)
    se = values.std(ddof=1) / math.sqrt(values.size)
    return SeedStats(mean=float(values.mean()), half_width=float(1.96 * se))
