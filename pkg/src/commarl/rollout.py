"""Batched episode collection: step a set of environments in lockstep.

Per timestep and agent: advance the recurrent state on the new
observation (inbox slot zeroed), encode message means from that state,
sample or copy the message values, optionally cut low-|mean| bits,
assemble inboxes, re-run the recurrent cell with the real inbox to get
Q values, then act epsilon-greedily over available actions.

The op order here mirrors `losses.unroll` exactly so that stored
episodes can be replayed bit-exactly under the same parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .comm import BY_MESSAGE, CutPolicy
from .envs.core import Env
from .losses import messages_to_inboxes
from .model import ModelSpec, ParamStore


@dataclass
class Episode:
    """One full trajectory with everything needed to replay the losses."""

    obs: np.ndarray         # [T+1, n, obs_dim]
    state: np.ndarray       # [T+1, state_dim]
    avail: np.ndarray       # [T+1, n, n_actions] bool
    actions: np.ndarray     # [T, n] int64
    reward: np.ndarray      # [T]
    terminated: np.ndarray  # [T] bool (env termination; truncation excluded)
    means: np.ndarray       # [T, n, n-1, L]
    values: np.ndarray      # [T, n, n-1, L] post-cut message values
    masks: np.ndarray       # [T, n, n-1, L] bool, True = bit sent
    won: bool

    @property
    def length(self) -> int:
        return len(self.reward)

    @property
    def ret(self) -> float:
        return float(self.reward.sum())


def cut_mask(means: torch.Tensor, policy: CutPolicy | None) -> torch.Tensor:
    """Vectorized bit-send mask over [..., L] message means."""
    if policy is None or policy.mode == "none":
        return torch.ones_like(means, dtype=torch.bool)
    above = means.abs() >= policy.threshold
    if policy.rate_scope == BY_MESSAGE:
        return above.any(dim=-1, keepdim=True).expand_as(above)
    return above


def collect_episodes(
    envs: list[Env],
    store: ParamStore,
    seeds: list[int],
    eps: float,
    action_rng: np.random.Generator,
    noise_generator: torch.Generator | None = None,
    cut_policy: CutPolicy | None = None,
    sample_messages: bool = True,
) -> list[Episode]:
    """Run one episode in each env; greedy when eps=0.

    With sample_messages=False the transmitted values are the means
    themselves (deterministic evaluation mode).
    """
    spec = store.spec
    n, R = spec.n_agents, len(envs)
    dtype = next(store.agent.parameters()).dtype

    results = [env.reset(seed) for env, seed in zip(envs, seeds)]
    obs = np.stack([np.stack(r.observations) for r in results])
    state = np.stack([r.global_state for r in results])
    avail = np.stack([r.avail_actions for r in results])

    # copy: the lockstep arrays are overwritten in place each step
    rec = [{"obs": [obs[k].copy()], "state": [state[k].copy()], "avail": [avail[k].copy()],
            "actions": [], "reward": [], "terminated": [], "means": [],
            "values": [], "masks": [], "won": False} for k in range(R)]
    active = np.ones(R, dtype=bool)

    ids = torch.eye(n, dtype=dtype).expand(R, -1, -1).reshape(R * n, n)
    hidden = store.agent.initial_hidden(R * n)
    zero_inbox = torch.zeros(R * n, spec.inbox_dim, dtype=dtype)
    last_actions = np.zeros((R, n), dtype=np.int64)
    first_step = True

    with torch.no_grad():
        while active.any():
            obs_t = torch.as_tensor(obs, dtype=dtype).reshape(R * n, -1)
            if first_step:
                last_a = torch.zeros(R, n, spec.n_actions, dtype=dtype)
            else:
                last_a = F.one_hot(torch.as_tensor(last_actions), spec.n_actions).to(dtype)
            last_a = last_a.reshape(R * n, -1)

            _, pre_hidden = store.agent(obs_t, last_a, ids, zero_inbox, hidden)
            means = store.encoder(pre_hidden, ids).view(R, n, n - 1, spec.msg_len)
            if sample_messages:
                noise = torch.randn(means.shape, dtype=dtype, generator=noise_generator)
                values = means + noise
            else:
                values = means
            mask = cut_mask(means, cut_policy)
            sent = values * mask
            inbox = messages_to_inboxes(sent).reshape(R * n, -1)
            q, hidden = store.agent(obs_t, last_a, ids, inbox, hidden)
            q = q.view(R, n, -1)

            q_masked = q.masked_fill(~torch.as_tensor(avail), -1e10)
            greedy = q_masked.argmax(dim=-1).numpy()
            actions = greedy.copy()
            if eps > 0:
                explore = action_rng.random((R, n)) < eps
                for k in range(R):
                    for a in range(n):
                        if explore[k, a]:
                            legal = np.flatnonzero(avail[k, a])
                            actions[k, a] = action_rng.choice(legal)

            for k in range(R):
                if not active[k]:
                    continue
                result = envs[k].step(actions[k])
                rec[k]["actions"].append(actions[k].copy())
                rec[k]["reward"].append(result.reward)
                rec[k]["terminated"].append(result.terminated)
                rec[k]["means"].append(means[k].numpy().copy())
                rec[k]["values"].append(sent[k].numpy().copy())
                rec[k]["masks"].append(mask[k].numpy().copy())
                rec[k]["obs"].append(np.stack(result.observations))
                rec[k]["state"].append(result.global_state)
                rec[k]["avail"].append(result.avail_actions)
                if result.done:
                    active[k] = False
                    rec[k]["won"] = bool(result.info.get("won", False))
                else:
                    obs[k] = np.stack(result.observations)
                    state[k] = result.global_state
                    avail[k] = result.avail_actions
                last_actions[k] = actions[k]
            first_step = False

    episodes = []
    for k in range(R):
        r = rec[k]
        episodes.append(Episode(
            obs=np.stack(r["obs"]).astype(np.float32),
            state=np.stack(r["state"]).astype(np.float32),
            avail=np.stack(r["avail"]),
            actions=np.stack(r["actions"]),
            reward=np.asarray(r["reward"], dtype=np.float32),
            terminated=np.asarray(r["terminated"], dtype=bool),
            means=np.stack(r["means"]),
            values=np.stack(r["values"]),
            masks=np.stack(r["masks"]),
            won=r["won"],
        ))
    return episodes


def scripted_episode(env: Env, seed: int, policy) -> float:
    """Roll one episode with a callable policy(step_result, t) -> joint action.

    Returns the episode return; used by oracle-backed tests.
    """
    result = env.reset(seed)
    total, t = 0.0, 0
    while not result.done:
        result = env.step(policy(result, t))
        total += result.reward
        t += 1
    return total
