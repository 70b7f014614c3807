"""End-to-end acceptance criteria, one test per criterion.

A1-A5 read trained artifacts from artifacts/<run>/seed_<s>/ and fail with
a pointer to scripts/train_all.py when those are absent.  The remaining
criteria are self-contained property checks.
"""

import itertools
import math
import os

import numpy as np
import pytest
import torch

from commarl.comm import BY_BIT, CutPolicy, decode_mask, encode_mask
from commarl.envs import make_env
from commarl.evaluate import evaluate, run_greedy_episodes, sweep_drop
from commarl.losses import Hyperparams
from commarl.model import Mixer, ModelSpec, load_checkpoint
from commarl.oracle import (_adaptive_simpson, eq5_check, random_theorem1_instance,
                            theorem1_check, total_loss_gradcheck)
from commarl.losses import succinctness_loss
from commarl.rollout import cut_mask
from commarl.trainer import TrainConfig, train

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
ARTIFACTS = os.path.join(ROOT, "artifacts")
SEEDS = [0, 1, 2, 3, 4]


def load_run(run_name, seed):
    """Load the final checkpoint of a trained run from artifacts/."""
    out_dir = os.path.join(ARTIFACTS, run_name, f"seed_{seed}")
    if not os.path.isdir(out_dir):
        pytest.fail(f"missing trained artifacts in {out_dir}; "
                    "run scripts/train_all.py first")
    names = [f for f in os.listdir(out_dir)
             if f.startswith("checkpoint_") and f.endswith(".pt")]
    final = max(names, key=lambda f: int(f.split("_")[1].split(".")[0]))
    return load_checkpoint(os.path.join(out_dir, final))


def per_step_reward(store, env_name, n_episodes=480, seed=1234):
    # 480 episodes keep the standard error of the per-step estimate near
    # 0.1; stochastic target arrivals make 48-episode estimates swing by
    # several tenths around the true mean even for an optimal policy.
    metrics = evaluate(store, lambda: make_env(env_name), n_episodes, seed=seed)
    return metrics["mean_return"] / metrics["mean_episode_len"]


def sensor_channel_fracs(store, threshold=2.0, n_episodes=48, seed=7):
    """Per ordered channel (i, j): fraction of steps with |mu| >= threshold
    for each bit, both unconditionally and on target-2-present steps.

    Agent 2 observes target 2 in its west-adjacent area (obs component 0).
    """
    episodes = run_greedy_episodes(store, lambda: make_env("sensor"),
                                   n_episodes, seed)
    means = np.concatenate([ep.means for ep in episodes])          # [N, n, n-1, L]
    t2 = np.concatenate([ep.obs[:-1, 2, 0] for ep in episodes]) > 0.5
    n = means.shape[1]
    overall, when_t2 = {}, {}
    for i, j in itertools.permutations(range(n), 2):
        slot = j - (1 if j > i else 0)
        above = np.abs(means[:, i, slot, :]) >= threshold          # [N, L]
        overall[(i, j)] = above.mean(axis=0)
        when_t2[(i, j)] = above[t2].mean(axis=0)
    return overall, when_t2


def test_A1_sensor_performance_gap():
    comm = [per_step_reward(load_run("sensor", s)[0], "sensor") for s in SEEDS]
    base = [per_step_reward(load_run("sensor_no_comm", s)[0], "sensor")
            for s in SEEDS]
    assert np.mean(comm) >= 14.5, f"comm per-step rewards {comm}"
    assert abs(np.mean(base) - 12.5) <= 1.0, f"no-comm per-step rewards {base}"


def converged_sensor_seeds():
    out = []
    for s in SEEDS:
        store, _ = load_run("sensor", s)
        if per_step_reward(store, "sensor") >= 14.5:
            out.append((s, store))
    if not out:
        pytest.fail("no converged sensor run found")
    return out


def test_A2_sensor_minimized_protocol():
    # Agents 1 and 2 both observe target 2, so which of them ends up as
    # the lone sender to agent 0 is decided by seed-level symmetry
    # breaking, and individual seeds can also retain redundant channels
    # at the step budget.  The minimized 2->0 protocol must appear among
    # the converged seeds: that seed signals target 2 on channel 2->0
    # and keeps every other channel below threshold.
    patterns = {}
    for seed, store in converged_sensor_seeds():
        overall, when_t2 = sensor_channel_fracs(store, threshold=2.0)
        patterns[seed] = (overall, when_t2)
        if when_t2[(2, 0)].max() < 0.5:
            continue
        if all(fracs.max() <= 0.1 for chan, fracs in overall.items()
               if chan != (2, 0)):
            return
    pytest.fail("no converged seed learned the minimized 2->0 protocol: "
                + repr({s: {c: list(np.round(o[c], 3)) for c in sorted(o)}
                        for s, (o, _) in patterns.items()}))


def test_A3_beta_sensitivity():
    silent, _ = load_run("sensor_beta_1", 0)
    overall, _ = sensor_channel_fracs(silent, threshold=2.0)
    for chan, fracs in overall.items():
        assert fracs.max() <= 0.05, f"beta=1 channel {chan} bit fracs {fracs}"

    redundant, _ = load_run("sensor_beta_1e-5", 0)
    _, when_t2 = sensor_channel_fracs(redundant, threshold=2.0)
    assert when_t2[(2, 0)].max() >= 0.5, f"2->0 bit fracs {when_t2[(2, 0)]}"
    assert when_t2[(1, 0)].max() >= 0.5, f"1->0 bit fracs {when_t2[(1, 0)]}"


def test_A4_hallway_drop_rates():
    factory = lambda: make_env("hallway")
    wins = {0.0: [], 0.8: [], 1.0: []}
    for s in SEEDS:
        store, _ = load_run("hallway", s)
        rows = sweep_drop(store, factory, rates=[0.0, 0.8, 1.0], scope=BY_BIT,
                          n_episodes=48, calibration_episodes=100, seed=1234)
        for row in rows:
            wins[row["rate"]].append(row["win_rate"])
    assert np.mean(wins[0.0]) >= 0.95, f"win rates at drop 0: {wins[0.0]}"
    assert np.mean(wins[0.8]) >= 0.95, f"win rates at drop 0.8: {wins[0.8]}"
    assert np.mean(wins[1.0]) < 0.6, f"win rates at drop 1.0: {wins[1.0]}"

    base = [evaluate(load_run("hallway_no_comm", s)[0], factory, 48,
                     seed=1234)["win_rate"] for s in SEEDS]
    assert 0.35 <= np.mean(base) <= 0.65, f"no-comm win rates {base}"


def test_A5_search_cut_invariance():
    store, _ = load_run("search", 0)
    rows = sweep_drop(store, lambda: make_env("search"), rates=[0.0, 1.0],
                      scope=BY_BIT, n_episodes=48, calibration_episodes=50,
                      seed=1234)
    full, none = rows[0]["mean_return"], rows[1]["mean_return"]
    assert abs(none - full) <= 0.02 * abs(full), f"returns {full} vs {none}"


def test_A6_bound_properties():
    rng = np.random.default_rng(0)
    for _ in range(50):
        theorem1_check(**random_theorem1_instance(rng), tol=1e-9)
    for _ in range(50):
        k = int(rng.integers(1, 6))
        probs = rng.random(k)
        probs /= probs.sum()
        lhs, rhs = eq5_check(probs, rng.normal(scale=3.0, size=k))
        assert lhs <= rhs + 1e-6

    for mu in (0.0, 0.7, -2.3):
        def integrand(x, mu=mu):
            p = math.exp(-0.5 * (x - mu) ** 2) / math.sqrt(2 * math.pi)
            q = math.exp(-0.5 * x ** 2) / math.sqrt(2 * math.pi)
            return p * math.log(p / q) if p > 0 else 0.0

        numeric = _adaptive_simpson(integrand, mu - 12.0, mu + 12.0, 1e-9)
        closed = succinctness_loss(torch.tensor([[[[[mu]]]]])).item()
        assert abs(numeric - closed) < 1e-6


def test_A7_gradient_correctness():
    assert total_loss_gradcheck(seed=0) < 1e-4


def test_A8_mixer_monotone_and_argmax_consistent():
    torch.manual_seed(0)
    spec = ModelSpec(n_agents=3, n_actions=4, obs_dim=2, state_dim=5, msg_len=1)
    for trial in range(1000):
        mixer = Mixer(spec)
        qs = torch.randn(spec.n_agents) * 3
        state = torch.randn(spec.state_dim)
        base = mixer(qs, state).item()
        bumped = qs.clone()
        bumped[trial % spec.n_agents] += 1.0
        assert mixer(bumped, state).item() >= base - 1e-6

    spec2 = ModelSpec(n_agents=2, n_actions=3, obs_dim=2, state_dim=4, msg_len=1)
    for _ in range(200):
        mixer = Mixer(spec2)
        q = torch.randn(2, 3) * 2
        state = torch.randn(spec2.state_dim)
        per_agent = tuple(int(a) for a in q.argmax(dim=1))
        joint = max(itertools.product(range(3), repeat=2),
                    key=lambda a: mixer(torch.stack([q[0, a[0]], q[1, a[1]]]),
                                        state).item())
        assert mixer(torch.stack([q[0, per_agent[0]], q[1, per_agent[1]]]),
                     state).item() == pytest.approx(
            mixer(torch.stack([q[0, joint[0]], q[1, joint[1]]]), state).item())


def test_A9_wire_format_and_cut_monotonicity():
    for length in range(0, 9):
        for bits in itertools.product([False, True], repeat=length):
            mask = np.array(bits, dtype=bool)
            assert np.array_equal(decode_mask(encode_mask(mask), length), mask)

    gen = torch.Generator().manual_seed(0)
    means = torch.randn(10_000, 4, generator=gen) * 2
    lo = cut_mask(means, CutPolicy(mode="threshold", threshold=0.5))
    hi = cut_mask(means, CutPolicy(mode="threshold", threshold=2.0))
    assert bool((hi <= lo).all())


def test_A10_fixed_seed_reproducibility(tmp_path):
    def run(out):
        config = TrainConfig(
            env_name="sensor",
            hyper=Hyperparams(beta=1e-3, lamda=0.1, msg_len=2, batch_size=4,
                              eps_anneal_steps=400, target_sync_interval=10),
            total_env_steps=800, n_parallel_runners=1, buffer_capacity=64,
            eval_interval=400, eval_episodes=4, seed=11, out_dir=str(out))
        with open(train(config)["metrics_csv"], "rb") as f:
            return f.read()

    assert run(tmp_path / "a") == run(tmp_path / "b")
