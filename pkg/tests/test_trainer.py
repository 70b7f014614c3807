"""Training loop artifacts, determinism, and schedule contracts."""

import csv
import os

import numpy as np
import pytest
import torch

from commarl.losses import Hyperparams
from commarl.model import ModelSpec, ParamStore, load_checkpoint
from commarl.trainer import (METRICS_COLUMNS, TrainConfig, checkpoint_metadata,
                             model_spec_for, sync_target, train)

FAST_HYPER = dict(batch_size=4, eps_anneal_steps=400, target_sync_interval=10)


def tiny_config(out_dir, seed=0, steps=800, **hyper_kw):
    return TrainConfig(
        env_name="sensor",
        hyper=Hyperparams(beta=1e-3, lamda=0.1, msg_len=2,
                          **{**FAST_HYPER, **hyper_kw}),
        total_env_steps=steps,
        n_parallel_runners=1,
        buffer_capacity=64,
        eval_interval=400,
        eval_episodes=4,
        seed=seed,
        out_dir=str(out_dir),
    )


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestConfigValidation:
    def test_counts(self):
        with pytest.raises(ValueError):
            TrainConfig(n_parallel_runners=0)
        with pytest.raises(ValueError):
            TrainConfig(total_env_steps=-1)

    def test_model_spec_for(self):
        config = TrainConfig(env_name="hallway", hyper=Hyperparams(msg_len=3))
        spec = model_spec_for(config)
        assert spec.n_agents == 2 and spec.msg_len == 3

    def test_metadata(self):
        config = TrainConfig(env_name="sensor", seed=5)
        meta = checkpoint_metadata(config, 123)
        assert meta["env_name"] == "sensor"
        assert meta["env_steps"] == 123
        assert meta["seed"] == 5
        assert meta["hyper"]["gamma"] == config.hyper.gamma


class TestSyncTarget:
    def test_copies_live(self):
        spec = ModelSpec(n_agents=2, n_actions=3, obs_dim=2, state_dim=3, msg_len=1)
        store = ParamStore(spec, seed=0)
        with torch.no_grad():
            for p in store.agent.parameters():
                p.add_(0.5)
        sync_target(store)
        for a, b in zip(store.agent.state_dict().values(),
                        store.target_agent.state_dict().values()):
            assert torch.equal(a, b)


class TestTrainArtifacts:
    def test_zero_steps_initial_checkpoint_only(self, tmp_path):
        artifacts = train(tiny_config(tmp_path, steps=0))
        assert os.path.exists(artifacts["checkpoints"][0])
        rows = read_csv(artifacts["metrics_csv"])
        assert rows[0] == METRICS_COLUMNS
        assert len(rows) == 1  # header only, no evaluations

    def test_metrics_columns_and_rows(self, tmp_path):
        artifacts = train(tiny_config(tmp_path))
        rows = read_csv(artifacts["metrics_csv"])
        assert rows[0] == METRICS_COLUMNS
        assert len(rows) >= 2
        env_steps = [int(r[0]) for r in rows[1:]]
        assert env_steps == sorted(env_steps)
        assert artifacts["updates"] > 0

    def test_final_checkpoint_loads(self, tmp_path):
        artifacts = train(tiny_config(tmp_path))
        store, meta = load_checkpoint(artifacts["final_checkpoint"])
        assert meta["env_name"] == "sensor"
        assert meta["env_steps"] == artifacts["env_steps"]

    def test_single_runner_fixed_seed_reproducible(self, tmp_path):
        a = train(tiny_config(tmp_path / "a", seed=3))
        b = train(tiny_config(tmp_path / "b", seed=3))
        with open(a["metrics_csv"], "rb") as f:
            bytes_a = f.read()
        with open(b["metrics_csv"], "rb") as f:
            bytes_b = f.read()
        assert bytes_a == bytes_b

    def test_seed_changes_metrics(self, tmp_path):
        a = train(tiny_config(tmp_path / "a", seed=3))
        b = train(tiny_config(tmp_path / "b", seed=4))
        with open(a["metrics_csv"], "rb") as f:
            bytes_a = f.read()
        with open(b["metrics_csv"], "rb") as f:
            bytes_b = f.read()
        assert bytes_a != bytes_b

    def test_early_stop(self, tmp_path):
        config = tiny_config(tmp_path, steps=4000)
        config.early_stop_patience = 1
        config.early_stop_min_steps = 400
        artifacts = train(config)
        assert artifacts["env_steps"] <= 4000
        if artifacts["stopped_early"]:
            assert artifacts["env_steps"] < 4000
