"""Two-agent hallway rendezvous task.

Agent A starts uniformly on chain a_m ... a_1, agent B on b_n ... b_1;
both chains end at a shared goal cell g.  Moving left walks toward g and
moving left from position 1 enters g.  The episode ends the first step
any agent stands on g, and the team is paid `win_reward` only if both
enter g on that same step.  Each agent observes just its own position
(one-hot), so winning reliably requires the agents to signal when they
are ready at position 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Env, EnvSpec, StepResult, one_hot

LEFT, RIGHT, STAY = range(3)


@dataclass
class HallwayConfig:
    m: int = 4
    n: int = 4
    win_reward: float = 10.0

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("chain lengths m, n must be >= 1")


class HallwayEnv(Env):
    def __init__(self, config: HallwayConfig | None = None):
        self.config = config or HallwayConfig()
        self._width = max(self.config.m, self.config.n)
        spec = EnvSpec(
            n_agents=2,
            n_actions=3,
            obs_dim=self._width,
            state_dim=2 * self._width,
            episode_limit=self._width + 10,
        )
        super().__init__(spec)
        # positions: 1..m (or 1..n); 0 means g
        self._pos = [1, 1]

    def _obs_of(self, pos: int) -> np.ndarray:
        if pos == 0:
            return np.zeros(self._width)
        return one_hot(pos - 1, self._width)

    def _observations(self) -> list[np.ndarray]:
        return [self._obs_of(p) for p in self._pos]

    def _state(self) -> np.ndarray:
        return np.concatenate([self._obs_of(p) for p in self._pos])

    def _reset(self) -> StepResult:
        self._pos = [
            int(self._rng.integers(1, self.config.m + 1)),
            int(self._rng.integers(1, self.config.n + 1)),
        ]
        return StepResult(
            observations=self._observations(),
            global_state=self._state(),
            reward=0.0,
            terminated=False,
            truncated=False,
            avail_actions=self._all_avail(),
        )

    def _step(self, joint_action: list[int]) -> StepResult:
        limits = (self.config.m, self.config.n)
        for k, action in enumerate(joint_action):
            if action == LEFT:
                self._pos[k] -= 1
            elif action == RIGHT:
                self._pos[k] = min(self._pos[k] + 1, limits[k])
        at_goal = [p == 0 for p in self._pos]
        terminated = any(at_goal)
        won = all(at_goal)
        reward = self.config.win_reward if won else 0.0
        return StepResult(
            observations=self._observations(),
            global_state=self._state(),
            reward=reward,
            terminated=terminated,
            truncated=False,
            avail_actions=self._all_avail(),
            info={"won": won},
        )


def make_hallway(config: HallwayConfig | None = None) -> HallwayEnv:
    return HallwayEnv(config)
