"""Environment contract and task dynamics tests."""

import numpy as np
import pytest

from commarl.envs import make_env
from commarl.envs.core import ContractViolation, EnvSpec, one_hot
from commarl.envs.hallway import LEFT, RIGHT, STAY, HallwayConfig, make_hallway
from commarl.envs.search import SearchConfig, make_search
from commarl.envs.sensor import (NOOP, SCAN_EAST, SCAN_WEST, SensorConfig,
                                 make_sensor, scan_reward)


def rollout_rewards(env, seed, joint_actions):
    env.reset(seed)
    return [env.step(a).reward for a in joint_actions]


def hallway_with_start(start, config=None):
    """Search reset seeds until the uniform start draw hits `start`."""
    env = make_hallway(config)
    for seed in range(10_000):
        result = env.reset(seed)
        pos = tuple(int(np.argmax(o)) + 1 if o.any() else 0
                    for o in result.observations)
        if pos == start:
            return env, result
    raise AssertionError(f"no seed found for start {start}")


class TestEnvSpec:
    def test_counts_validated(self):
        with pytest.raises(ValueError):
            EnvSpec(n_agents=0, n_actions=3, obs_dim=2, state_dim=2, episode_limit=5)
        with pytest.raises(ValueError):
            EnvSpec(n_agents=2, n_actions=3, obs_dim=2, state_dim=2, episode_limit=0)

    def test_hallway_info(self):
        spec = make_hallway(HallwayConfig(m=4, n=4)).env_info()
        assert spec.n_agents == 2
        assert spec.n_actions == 3
        assert spec.episode_limit == 14

    def test_sensor_info(self):
        spec = make_sensor().env_info()
        assert spec.n_agents == 3
        assert spec.n_actions == 5

    def test_search_info(self):
        spec = make_search().env_info()
        assert spec.n_agents == 2
        assert spec.episode_limit == 100

    def test_obs_dims_match_info(self):
        for name in ("sensor", "hallway", "search"):
            env = make_env(name)
            spec = env.env_info()
            result = env.reset(3)
            assert len(result.observations) == spec.n_agents
            for obs in result.observations:
                assert obs.shape == (spec.obs_dim,)
            assert result.global_state.shape == (spec.state_dim,)
            assert result.avail_actions.shape == (spec.n_agents, spec.n_actions)


class TestContract:
    def test_reset_deterministic(self):
        for name in ("sensor", "hallway", "search"):
            a = make_env(name).reset(7)
            b = make_env(name).reset(7)
            for oa, ob in zip(a.observations, b.observations):
                assert np.array_equal(oa, ob)
            assert a.reward == 0.0

    def test_trajectory_deterministic(self):
        actions = [(0, 1, 2, 3, 4)[k % 5] for k in range(10)]
        joint = [[a] * 3 for a in actions]
        r1 = rollout_rewards(make_sensor(), 11, joint)
        r2 = rollout_rewards(make_sensor(), 11, joint)
        assert r1 == r2

    def test_bad_action_index(self):
        env = make_sensor()
        env.reset(0)
        with pytest.raises(ContractViolation):
            env.step([0, 0, 9])

    def test_step_after_done(self):
        env = make_hallway(HallwayConfig(m=1, n=1))
        env.reset(0)
        env.step([LEFT, LEFT])
        with pytest.raises(ContractViolation):
            env.step([STAY, STAY])

    def test_avail_actions_all_true(self):
        env = make_sensor()
        result = env.reset(0)
        assert result.avail_actions.all()
        assert env.step([NOOP] * 3).avail_actions.all()


class TestSensor:
    def test_full_cover_reward(self):
        # target 2 present, area coverage by agents 1 and 2: 30 - 5 - 5
        env = make_sensor(SensorConfig(p_target2=1.0))
        env.reset(0)
        assert env.step([NOOP, SCAN_EAST, SCAN_WEST]).reward == 20.0

    def test_area1_only(self):
        env = make_sensor(SensorConfig(p_target2=0.0))
        env.reset(0)
        assert env.step([SCAN_EAST, SCAN_WEST, NOOP]).reward == 10.0

    def test_area1_misses_present_target2(self):
        env = make_sensor(SensorConfig(p_target2=1.0))
        env.reset(0)
        assert env.step([SCAN_EAST, SCAN_WEST, NOOP]).reward == 10.0

    def test_all_noop(self):
        env = make_sensor()
        env.reset(0)
        assert env.step([NOOP] * 3).reward == 0.0

    def test_reward_decomposition(self):
        # reward is always located bonuses plus -5 per scanning agent
        config = SensorConfig()
        rng = np.random.default_rng(0)
        for _ in range(300):
            target2 = bool(rng.integers(2))
            joint = list(rng.integers(0, 5, size=3))
            reward = scan_reward(config, target2, joint)
            scans = sum(1 for a in joint if a != NOOP)
            located = (config.reward_t1 * (joint[0] == SCAN_EAST and joint[1] == SCAN_WEST)
                       + config.reward_t2 * (target2 and joint[1] == SCAN_EAST
                                             and joint[2] == SCAN_WEST))
            assert reward == located + config.scan_cost * scans

    def test_obs_encode_adjacent_presence(self):
        env = make_sensor(SensorConfig(p_target2=1.0))
        result = env.reset(0)
        o1, o2, o3 = result.observations
        assert np.array_equal(o1, [0.0, 1.0])
        assert np.array_equal(o2, [1.0, 1.0])
        assert np.array_equal(o3, [1.0, 0.0])

    def test_truncates_at_limit(self):
        env = make_sensor(SensorConfig(episode_limit=4))
        env.reset(0)
        for _ in range(3):
            assert not env.step([NOOP] * 3).done
        result = env.step([NOOP] * 3)
        assert result.truncated and not result.terminated


class TestHallway:
    def test_simultaneous_arrival_wins(self):
        env, _ = hallway_with_start((1, 1))
        result = env.step([LEFT, LEFT])
        assert result.reward == 10.0
        assert result.terminated
        assert result.info["won"]

    def test_lone_arrival_loses(self):
        env, _ = hallway_with_start((1, 3))
        result = env.step([LEFT, LEFT])
        assert result.reward == 0.0
        assert result.terminated
        assert not result.info["won"]

    def test_two_step_win_from_a2_b1(self):
        env, _ = hallway_with_start((2, 1))
        assert env.step([LEFT, STAY]).reward == 0.0
        result = env.step([LEFT, LEFT])
        assert result.reward == 10.0 and result.info["won"]

    def test_never_moving_truncates(self):
        env = make_hallway()
        env.reset(0)
        total = 0.0
        for t in range(14):
            result = env.step([STAY, STAY])
            total += result.reward
        assert result.truncated and not result.terminated
        assert total == 0.0

    def test_right_capped_at_chain_end(self):
        env, _ = hallway_with_start((4, 4), HallwayConfig(m=4, n=4))
        result = env.step([RIGHT, RIGHT])
        for obs in result.observations:
            assert np.argmax(obs) + 1 == 4

    def test_observation_is_own_position_only(self):
        env, result = hallway_with_start((3, 1))
        assert np.array_equal(result.observations[0], one_hot(2, 4))
        assert np.array_equal(result.observations[1], one_hot(0, 4))


class TestSearch:
    @staticmethod
    def on_landmark(obs):
        cells = obs.size // 2
        return np.argmax(obs[:cells]) == np.argmax(obs[cells:])

    def test_reward_counts_agents_on_landmarks(self):
        env = make_search()
        result = env.reset(5)
        for _ in range(30):
            result = env.step(np.random.default_rng(0).integers(0, 5, size=2))
            expected = sum(self.on_landmark(o) for o in result.observations)
            assert result.reward == expected

    def test_reward_bounds(self):
        env = make_search(SearchConfig(horizon=20))
        env.reset(9)
        total = 0.0
        done = False
        while not done:
            result = env.step([4, 4])  # both stay
            total += result.reward
            done = result.done
        assert 0.0 <= total <= 40.0

    def test_agents_independent(self):
        # agent 1's on-landmark trace never depends on agent 0's actions
        rng = np.random.default_rng(3)
        fixed = list(rng.integers(0, 5, size=25))
        traces = []
        for variant in range(3):
            vrng = np.random.default_rng(100 + variant)
            env = make_search(SearchConfig(horizon=25))
            env.reset(42)
            trace = []
            for a1 in fixed:
                result = env.step([int(vrng.integers(0, 5)), a1])
                trace.append(self.on_landmark(result.observations[1]))
            traces.append(trace)
        assert traces[0] == traces[1] == traces[2]

    def test_never_terminates_only_truncates(self):
        env = make_search(SearchConfig(horizon=8))
        env.reset(0)
        for t in range(8):
            result = env.step([0, 0])
            assert not result.terminated
        assert result.truncated
