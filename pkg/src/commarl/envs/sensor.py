"""Three-sensor target-locating task.

Three sensors sit in a row with two shared scan areas between them:
area 1 lies between sensors 0 and 1, area 2 between sensors 1 and 2.
A target in area 1 is always present; a target in area 2 appears each
step with probability `p_target2`.  A target is located only when both
adjacent sensors scan its area on the same step.  Every scan costs 5;
locating target 1 / target 2 pays 20 / 30.  Targets are resampled
independently every step, so the per-step decision is what matters and
the reported metric is mean per-step team reward.

Each sensor observes target presence only in the areas next to it, which
is what makes the task require communication: sensor 0 cannot see area 2
but must stay idle exactly when target 2 is present.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Env, EnvSpec, StepResult

# action indices
SCAN_NORTH, SCAN_EAST, SCAN_SOUTH, SCAN_WEST, NOOP = range(5)

N_AGENTS = 3


@dataclass
class SensorConfig:
    p_target2: float = 0.5
    reward_t1: float = 20.0
    reward_t2: float = 30.0
    scan_cost: float = -5.0
    episode_limit: int = 10

    def __post_init__(self):
        if not 0.0 <= self.p_target2 <= 1.0:
            raise ValueError("p_target2 must be in [0, 1]")
        if self.scan_cost > 0:
            raise ValueError("scan_cost must be <= 0")


def scan_reward(config: SensorConfig, target2: bool, joint_action) -> float:
    """Team reward for one step given target-2 presence and all 3 actions.

    Pure function so oracles and tests can score action triples directly.
    """
    a = list(joint_action)
    n_scans = sum(1 for x in a if x != NOOP)
    reward = n_scans * config.scan_cost
    if a[0] == SCAN_EAST and a[1] == SCAN_WEST:
        reward += config.reward_t1  # target 1 is always present
    if target2 and a[1] == SCAN_EAST and a[2] == SCAN_WEST:
        reward += config.reward_t2
    return reward


class SensorEnv(Env):
    def __init__(self, config: SensorConfig | None = None):
        self.config = config or SensorConfig()
        spec = EnvSpec(
            n_agents=N_AGENTS,
            n_actions=5,
            obs_dim=2,
            state_dim=2,
            episode_limit=self.config.episode_limit,
        )
        super().__init__(spec)
        self._target2 = False

    def _draw_targets(self):
        self._target2 = bool(self._rng.random() < self.config.p_target2)

    def _observations(self) -> list[np.ndarray]:
        t1, t2 = 1.0, float(self._target2)
        # obs = (presence in west-adjacent area, presence in east-adjacent area)
        return [
            np.array([0.0, t1]),
            np.array([t1, t2]),
            np.array([t2, 0.0]),
        ]

    def _state(self) -> np.ndarray:
        return np.array([1.0, float(self._target2)])

    def _reset(self) -> StepResult:
        self._draw_targets()
        return StepResult(
            observations=self._observations(),
            global_state=self._state(),
            reward=0.0,
            terminated=False,
            truncated=False,
            avail_actions=self._all_avail(),
        )

    def _step(self, joint_action: list[int]) -> StepResult:
        reward = scan_reward(self.config, self._target2, joint_action)
        self._draw_targets()
        return StepResult(
            observations=self._observations(),
            global_state=self._state(),
            reward=reward,
            terminated=False,
            truncated=False,
            avail_actions=self._all_avail(),
        )


def make_sensor(config: SensorConfig | None = None) -> SensorEnv:
    return SensorEnv(config)
