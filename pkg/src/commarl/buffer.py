"""Episode replay buffer and padded-batch assembly."""

from __future__ import annotations

import numpy as np
import torch

from .losses import EpisodeBatch
from .rollout import Episode


class ReplayBuffer:
    """Ring buffer of whole episodes with uniform sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._episodes: list[Episode] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._episodes)

    def add(self, episode: Episode) -> None:
        if len(self._episodes) < self.capacity:
            self._episodes.append(episode)
        else:
            self._episodes[self._next] = episode
            self._next = (self._next + 1) % self.capacity

    def extend(self, episodes) -> None:
        for ep in episodes:
            self.add(ep)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Episode]:
        if len(self._episodes) < batch_size:
            raise ValueError(f"buffer holds {len(self._episodes)} episodes, need {batch_size}")
        idx = rng.choice(len(self._episodes), size=batch_size, replace=False)
        return [self._episodes[i] for i in idx]


def to_batch(episodes: list[Episode], dtype=torch.float32) -> EpisodeBatch:
    """Pad episodes to a common length and stack into torch tensors."""
    if not episodes:
        raise ValueError("empty episode list")
    B = len(episodes)
    T = max(ep.length for ep in episodes)
    n, obs_dim = episodes[0].obs.shape[1:]
    state_dim = episodes[0].state.shape[1]
    n_actions = episodes[0].avail.shape[2]

    obs = np.zeros((B, T + 1, n, obs_dim), dtype=np.float32)
    state = np.zeros((B, T + 1, state_dim), dtype=np.float32)
    avail = np.ones((B, T + 1, n, n_actions), dtype=bool)
    actions = np.zeros((B, T, n), dtype=np.int64)
    reward = np.zeros((B, T), dtype=np.float32)
    terminated = np.zeros((B, T), dtype=np.float32)
    mask = np.zeros((B, T), dtype=np.float32)

    for b, ep in enumerate(episodes):
        L = ep.length
        obs[b, :L + 1] = ep.obs
        state[b, :L + 1] = ep.state
        avail[b, :L + 1] = ep.avail
        actions[b, :L] = ep.actions
        reward[b, :L] = ep.reward
        terminated[b, :L] = ep.terminated
        mask[b, :L] = 1.0

    return EpisodeBatch(
        obs=torch.as_tensor(obs, dtype=dtype),
        state=torch.as_tensor(state, dtype=dtype),
        avail=torch.as_tensor(avail),
        actions=torch.as_tensor(actions),
        reward=torch.as_tensor(reward, dtype=dtype),
        terminated=torch.as_tensor(terminated, dtype=dtype),
        mask=torch.as_tensor(mask, dtype=dtype),
    )
