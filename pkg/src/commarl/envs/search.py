"""Independent landmark-search task.

Each of two agents lives in its own square grid room with one landmark;
transitions and rewards of the two agents are completely independent.
The team is paid, every step, 1 per agent currently standing on its own
landmark.  Since each agent observes both its position and its landmark,
the task is fully solvable without any communication — it exists to show
that learned communication shuts itself off here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Env, EnvSpec, StepResult, one_hot

UP, DOWN, LEFT, RIGHT, STAY = range(5)
_MOVES = {UP: (0, -1), DOWN: (0, 1), LEFT: (-1, 0), RIGHT: (1, 0), STAY: (0, 0)}


@dataclass
class SearchConfig:
    room_side: int = 5
    horizon: int = 100
    step_reward: float = 1.0

    def __post_init__(self):
        if self.room_side < 2:
            raise ValueError("room_side must be >= 2")


class SearchEnv(Env):
    def __init__(self, config: SearchConfig | None = None):
        self.config = config or SearchConfig()
        cells = self.config.room_side ** 2
        spec = EnvSpec(
            n_agents=2,
            n_actions=5,
            obs_dim=2 * cells,  # own position one-hot + landmark one-hot
            state_dim=4 * cells,
            episode_limit=self.config.horizon,
        )
        super().__init__(spec)
        self._agents = [(0, 0), (0, 0)]
        self._landmarks = [(0, 0), (0, 0)]

    def _cell_index(self, xy) -> int:
        x, y = xy
        return y * self.config.room_side + x

    def _obs_of(self, k: int) -> np.ndarray:
        cells = self.config.room_side ** 2
        return np.concatenate([
            one_hot(self._cell_index(self._agents[k]), cells),
            one_hot(self._cell_index(self._landmarks[k]), cells),
        ])

    def _observations(self) -> list[np.ndarray]:
        return [self._obs_of(0), self._obs_of(1)]

    def _state(self) -> np.ndarray:
        return np.concatenate(self._observations())

    def _reward(self) -> float:
        on = sum(1 for k in range(2) if self._agents[k] == self._landmarks[k])
        return on * self.config.step_reward

    def _reset(self) -> StepResult:
        side = self.config.room_side
        draw = lambda: (int(self._rng.integers(side)), int(self._rng.integers(side)))
        self._agents = [draw(), draw()]
        self._landmarks = [draw(), draw()]
        return StepResult(
            observations=self._observations(),
            global_state=self._state(),
            reward=0.0,
            terminated=False,
            truncated=False,
            avail_actions=self._all_avail(),
        )

    def _step(self, joint_action: list[int]) -> StepResult:
        side = self.config.room_side
        for k, action in enumerate(joint_action):
            dx, dy = _MOVES[action]
            x, y = self._agents[k]
            self._agents[k] = (
                min(max(x + dx, 0), side - 1),
                min(max(y + dy, 0), side - 1),
            )
        return StepResult(
            observations=self._observations(),
            global_state=self._state(),
            reward=self._reward(),
            terminated=False,
            truncated=False,
            avail_actions=self._all_avail(),
        )


def make_search(config: SearchConfig | None = None) -> SearchEnv:
    return SearchEnv(config)
