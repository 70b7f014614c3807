"""Evaluation, drop-rate sweeps, message dumps, seed statistics."""

import numpy as np
import pytest

from commarl.comm import BY_BIT, BY_MESSAGE, CutPolicy
from commarl.envs import make_env
from commarl.evaluate import (calibrated_policy, dump_messages, evaluate,
                              seed_ci, summarize_episodes, sweep_drop)
from commarl.model import ModelSpec, ParamStore


def store_for(env_name, msg_len=2, seed=0):
    env_spec = make_env(env_name).env_info()
    spec = ModelSpec(n_agents=env_spec.n_agents, n_actions=env_spec.n_actions,
                     obs_dim=env_spec.obs_dim, state_dim=env_spec.state_dim,
                     msg_len=msg_len)
    return ParamStore(spec, seed=seed)


class TestEvaluate:
    def test_deterministic(self):
        store = store_for("sensor")
        factory = lambda: make_env("sensor")
        a = evaluate(store, factory, n_episodes=6, seed=5)
        b = evaluate(store, factory, n_episodes=6, seed=5)
        assert a == b

    def test_untrained_hallway_win_rate_low(self):
        store = store_for("hallway")
        metrics = evaluate(store, lambda: make_env("hallway"), n_episodes=48, seed=0)
        assert metrics["win_rate"] <= 0.2

    def test_spec_mismatch_errors(self):
        store = store_for("sensor")
        with pytest.raises(ValueError):
            evaluate(store, lambda: make_env("hallway"), n_episodes=2)

    def test_drop_stats_reported(self):
        store = store_for("sensor")
        policy = CutPolicy(mode="threshold", threshold=1e9)
        metrics = evaluate(store, lambda: make_env("sensor"), n_episodes=4,
                           cut_policy=policy, seed=0)
        assert metrics["by_bit_drop_rate"] == 1.0
        assert metrics["bits_sent_total"] == 0


class TestSweep:
    def test_rows_sorted_and_rate_zero_matches_plain(self):
        store = store_for("sensor")
        factory = lambda: make_env("sensor")
        rows = sweep_drop(store, factory, rates=[0.8, 0.0], n_episodes=6,
                          calibration_episodes=10, seed=3)
        assert [r["rate"] for r in rows] == [0.0, 0.8]
        plain = evaluate(store, factory, n_episodes=6, seed=3)
        assert rows[0]["mean_return"] == plain["mean_return"]
        assert rows[0]["by_bit_drop_rate"] == 0.0

    def test_realized_rate_near_target(self):
        store = store_for("sensor")
        factory = lambda: make_env("sensor")
        rows = sweep_drop(store, factory, rates=[0.5, 0.9], n_episodes=12,
                          calibration_episodes=30, seed=0)
        for row in rows:
            assert abs(row["by_bit_drop_rate"] - row["rate"]) < 0.05

    def test_invalid_rate(self):
        store = store_for("sensor")
        with pytest.raises(ValueError):
            sweep_drop(store, lambda: make_env("sensor"), rates=[1.5], n_episodes=2,
                       calibration_episodes=2)

    def test_by_message_scope(self):
        store = store_for("sensor")
        rows = sweep_drop(store, lambda: make_env("sensor"), rates=[0.7],
                          scope=BY_MESSAGE, n_episodes=8,
                          calibration_episodes=20, seed=1)
        assert abs(rows[0]["by_message_drop_rate"] - 0.7) < 0.1


class TestCalibratedPolicy:
    def test_threshold_set(self):
        store = store_for("sensor")
        policy = calibrated_policy(store, lambda: make_env("sensor"), 0.5, BY_BIT,
                                   calibration_episodes=10, seed=0)
        assert policy.mode == "drop-rate"
        assert policy.threshold > 0.0


class TestDumpMessages:
    def test_summary_recomputes_from_records(self, tmp_path):
        store = store_for("sensor", msg_len=3)
        records, summary = dump_messages(
            store, lambda: make_env("sensor"), n_episodes=4, threshold=0.1,
            dump_path=tmp_path / "dump.csv", summary_path=tmp_path / "summary.csv",
            seed=0)
        for row in summary:
            chan = np.stack([r.means for r in records
                             if r.sender == row["i"] and r.recipient == row["j"]])
            mags = np.abs(chan[:, row["bit"]])
            assert row["mean_abs_mu"] == pytest.approx(float(mags.mean()))
            assert row["frac_above_threshold"] == pytest.approx(
                float((mags >= 0.1).mean()))

    def test_covers_all_ordered_channels(self, tmp_path):
        store = store_for("sensor", msg_len=2)
        _, summary = dump_messages(store, lambda: make_env("sensor"),
                                   n_episodes=2, threshold=1.0)
        channels = {(row["i"], row["j"]) for row in summary}
        assert channels == {(i, j) for i in range(3) for j in range(3) if i != j}


class TestSeedCi:
    def test_formula(self):
        values = [1.0, 2.0, 3.0, 4.0, 5.0]
        ci = seed_ci(values)
        se = np.std(values, ddof=1) / np.sqrt(5)
        assert ci.mean == 3.0
        assert ci.half_width == pytest.approx(1.96 * se)
        assert ci.low == pytest.approx(3.0 - 1.96 * se)
        assert ci.high == pytest.approx(3.0 + 1.96 * se)

    def test_single_seed_no_band(self):
        ci = seed_ci([2.5])
        assert ci.mean == 2.5 and ci.half_width == 0.0
