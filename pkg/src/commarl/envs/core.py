"""Environment contract shared by all cooperative multi-agent tasks.

Every environment is a Dec-POMDP with a team reward: each agent gets a
local observation vector, the learner additionally sees a global state
vector, and all agents share a single scalar reward per step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    """Static description of an environment instance."""

    n_agents: int
    n_actions: int
    obs_dim: int
    state_dim: int
    episode_limit: int

    def __post_init__(self):
        for name in ("n_agents", "n_actions", "obs_dim", "state_dim", "episode_limit"):
            if getattr(self, name) < 1:
                raise ValueError(f"EnvSpec.{name} must be >= 1, got {getattr(self, name)}")


@dataclass
class StepResult:
    """Outcome of one environment transition (or of a reset, with reward 0).

    `terminated` means the task itself ended; `truncated` means the episode
    hit its step limit. They are reported separately so the TD target can
    still bootstrap on truncation.
    """

    observations: list[np.ndarray]
    global_state: np.ndarray
    reward: float
    terminated: bool
    truncated: bool
    avail_actions: np.ndarray  # [n_agents, n_actions] boolean mask
    info: dict = field(default_factory=dict)

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class ContractViolation(RuntimeError):
    """Raised when a caller breaks an environment's usage contract."""


class Env:
    """Base class: seeded reset / joint-action step / static spec."""

    def __init__(self, spec: EnvSpec):
        self._spec = spec
        self._rng = np.random.default_rng(0)
        self._t = 0
        self._done = True

    def env_info(self) -> EnvSpec:
        return self._spec

    def reset(self, seed: int) -> StepResult:
        self._rng = np.random.default_rng(np.uint64(seed))
        self._t = 0
        self._done = False
        result = self._reset()
        assert len(result.observations) == self._spec.n_agents
        return result

    def step(self, joint_action) -> StepResult:
        if self._done:
            raise ContractViolation("step() called on a finished episode; call reset()")
        joint_action = list(joint_action)
        if len(joint_action) != self._spec.n_agents:
            raise ContractViolation(
                f"expected {self._spec.n_agents} actions, got {len(joint_action)}"
            )
        for a in joint_action:
            if not 0 <= int(a) < self._spec.n_actions:
                raise ContractViolation(f"action index {a} out of range")
        self._t += 1
        result = self._step([int(a) for a in joint_action])
        if not result.terminated and self._t >= self._spec.episode_limit:
            result.truncated = True
        self._done = result.terminated or result.truncated
        return result

    def _all_avail(self) -> np.ndarray:
        return np.ones((self._spec.n_agents, self._spec.n_actions), dtype=bool)

    # subclass hooks
    def _reset(self) -> StepResult:
        raise NotImplementedError

    def _step(self, joint_action: list[int]) -> StepResult:
        raise NotImplementedError


def one_hot(index: int, width: int) -> np.ndarray:
    v = np.zeros(width, dtype=np.float64)
    v[index] = 1.0
    return v
