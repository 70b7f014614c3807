"""Trainable function approximators.

Four networks with a shared forward contract over batched tensors:

- ``AgentNet``     recurrent per-agent Q network (parameters shared by all
                   agents; the agent-id one-hot input disambiguates them)
- ``EncoderNet``   message encoder mapping an agent's recurrent state to
                   Gaussian message means, one L-bit head per recipient
- ``PosteriorNet`` variational action classifier over (recipient hidden
                   state, received messages), shared across agents
- ``Mixer``        state-conditioned monotone combiner of per-agent chosen
                   Q values (hypernetwork weights passed through abs())

``ParamStore`` bundles the live networks with the target copies used for
TD bootstrapping, and handles bit-exact checkpoint round-trips.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import torch
import torch.nn as nn
import torch.nn.functional as F

RNN_HIDDEN = 64
ENCODER_HIDDEN = 64
POSTERIOR_HIDDEN = 20
MIXING_HIDDEN = 32

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelSpec:
    """Shapes needed to build every network."""

    n_agents: int
    n_actions: int
    obs_dim: int
    state_dim: int
    msg_len: int

    @property
    def inbox_dim(self) -> int:
        return (self.n_agents - 1) * self.msg_len

    @property
    def agent_input_dim(self) -> int:
        return self.obs_dim + self.n_actions + self.n_agents + self.inbox_dim


class AgentNet(nn.Module):
    """Recurrent Q network: linear + ReLU -> GRU cell -> linear head."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.fc_in = nn.Linear(spec.agent_input_dim, RNN_HIDDEN)
        self.rnn = nn.GRUCell(RNN_HIDDEN, RNN_HIDDEN)
        self.fc_out = nn.Linear(RNN_HIDDEN, spec.n_actions)

    def initial_hidden(self, batch: int, **kw) -> torch.Tensor:
        p = next(self.parameters())
        return torch.zeros(batch, RNN_HIDDEN, dtype=p.dtype, device=p.device, **kw)

    def forward(self, obs, last_action_onehot, agent_id_onehot, inbox, hidden):
        x = torch.cat([obs, last_action_onehot, agent_id_onehot, inbox], dim=-1)
        h = self.rnn(F.relu(self.fc_in(x)), hidden)
        return self.fc_out(h), h


class EncoderNet(nn.Module):
    """Message encoder: (hidden state, agent id) -> per-recipient bit means."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.fc1 = nn.Linear(RNN_HIDDEN + spec.n_agents, ENCODER_HIDDEN)
        self.fc2 = nn.Linear(ENCODER_HIDDEN, spec.inbox_dim)

    def forward(self, hidden, agent_id_onehot):
        x = torch.cat([hidden, agent_id_onehot], dim=-1)
        means = self.fc2(F.relu(self.fc1(x)))
        return means.view(*means.shape[:-1], self.spec.n_agents - 1, self.spec.msg_len)


class PosteriorNet(nn.Module):
    """Action classifier q(a | recipient hidden, inbox), two hidden layers."""

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.fc1 = nn.Linear(RNN_HIDDEN + spec.inbox_dim, POSTERIOR_HIDDEN)
        self.fc2 = nn.Linear(POSTERIOR_HIDDEN, POSTERIOR_HIDDEN)
        self.fc3 = nn.Linear(POSTERIOR_HIDDEN, spec.n_actions)

    def logits(self, hidden, inbox):
        x = torch.cat([hidden, inbox], dim=-1)
        return self.fc3(F.relu(self.fc2(F.relu(self.fc1(x)))))

    def forward(self, hidden, inbox):
        return torch.softmax(self.logits(hidden, inbox), dim=-1)


class Mixer(nn.Module):
    """Monotone mixing of chosen per-agent Qs into q_tot.

    Mixing weights come from hypernetworks conditioned on the global
    state and are passed through abs(), which makes q_tot nondecreasing
    in every input Q for any parameter values.
    """

    def __init__(self, spec: ModelSpec):
        super().__init__()
        self.spec = spec
        self.hyper_w1 = nn.Linear(spec.state_dim, spec.n_agents * MIXING_HIDDEN)
        self.hyper_b1 = nn.Linear(spec.state_dim, MIXING_HIDDEN)
        self.hyper_w2 = nn.Linear(spec.state_dim, MIXING_HIDDEN)
        self.value = nn.Sequential(
            nn.Linear(spec.state_dim, MIXING_HIDDEN),
            nn.ReLU(),
            nn.Linear(MIXING_HIDDEN, 1),
        )

    def forward(self, chosen_qs, state):
        # chosen_qs: [..., n_agents], state: [..., state_dim] -> [...]
        w1 = torch.abs(self.hyper_w1(state))
        w1 = w1.view(*w1.shape[:-1], self.spec.n_agents, MIXING_HIDDEN)
        b1 = self.hyper_b1(state)
        hidden = F.elu((chosen_qs.unsqueeze(-2) @ w1).squeeze(-2) + b1)
        w2 = torch.abs(self.hyper_w2(state))
        v = self.value(state).squeeze(-1)
        return (hidden * w2).sum(dim=-1) + v


# functional forward contracts

def agent_forward(agent: AgentNet, obs, last_action_onehot, agent_id_onehot,
                  inbox, hidden):
    return agent(obs, last_action_onehot, agent_id_onehot, inbox, hidden)


def encode_messages(encoder: EncoderNet, hidden, agent_id_onehot):
    return encoder(hidden, agent_id_onehot)


def posterior_forward(posterior: PosteriorNet, hidden, inbox):
    return posterior(hidden, inbox)


def mix(mixer: Mixer, chosen_qs, state):
    return mixer(chosen_qs, state)


class ParamStore:
    """Live networks plus the target copies used in TD bootstrapping."""

    def __init__(self, spec: ModelSpec, dtype=torch.float32, seed: int | None = None):
        self.spec = spec
        if seed is not None:
            torch.manual_seed(seed)
        self.agent = AgentNet(spec)
        self.encoder = EncoderNet(spec)
        self.posterior = PosteriorNet(spec)
        self.mixer = Mixer(spec)
        self.target_agent = AgentNet(spec)
        self.target_encoder = EncoderNet(spec)
        self.target_mixer = Mixer(spec)
        self.to_dtype(dtype)
        self.sync_target()
        for net in (self.target_agent, self.target_encoder, self.target_mixer):
            for p in net.parameters():
                p.requires_grad_(False)

    @property
    def live_modules(self) -> dict[str, nn.Module]:
        return {
            "agent": self.agent,
            "encoder": self.encoder,
            "posterior": self.posterior,
            "mixer": self.mixer,
        }

    def to_dtype(self, dtype):
        self.dtype = dtype
        for net in (self.agent, self.encoder, self.posterior, self.mixer,
                    self.target_agent, self.target_encoder, self.target_mixer):
            net.to(dtype)
        return self

    def parameters(self):
        for module in self.live_modules.values():
            yield from module.parameters()

    def sync_target(self) -> None:
        self.target_agent.load_state_dict(self.agent.state_dict())
        self.target_encoder.load_state_dict(self.encoder.state_dict())
        self.target_mixer.load_state_dict(self.mixer.state_dict())

    def state_dict(self) -> dict:
        out = {name: m.state_dict() for name, m in self.live_modules.items()}
        out["target_agent"] = self.target_agent.state_dict()
        out["target_encoder"] = self.target_encoder.state_dict()
        out["target_mixer"] = self.target_mixer.state_dict()
        return out

    def load_state_dict(self, state: dict) -> None:
        for name, module in self.live_modules.items():
            module.load_state_dict(state[name])
        self.target_agent.load_state_dict(state["target_agent"])
        self.target_encoder.load_state_dict(state["target_encoder"])
        self.target_mixer.load_state_dict(state["target_mixer"])


def grad(loss: torch.Tensor, store: ParamStore) -> list[torch.Tensor]:
    """Gradients of a scalar loss w.r.t. every live parameter.

    Parameters a loss does not touch get zero gradients so shapes always
    line up with ``store.parameters()``.
    """
    if not torch.isfinite(loss):
        raise FloatingPointError(f"non-finite loss: {loss.item()}")
    params = list(store.parameters())
    grads = torch.autograd.grad(loss, params, allow_unused=True, retain_graph=False)
    return [g if g is not None else torch.zeros_like(p) for g, p in zip(grads, params)]


def save_checkpoint(path, store: ParamStore, metadata: dict) -> None:
    """Self-describing checkpoint: version + metadata + all parameter groups."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "model_spec": vars(store.spec) | {},
        "metadata": metadata,
        "params": store.state_dict(),
    }
    with open(path, "wb") as f:
        torch.save(payload, f)


def load_checkpoint(path, dtype=torch.float32) -> tuple[ParamStore, dict]:
    with open(path, "rb") as f:
        payload = torch.load(f, weights_only=False)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    spec = ModelSpec(**payload["model_spec"])
    store = ParamStore(spec, dtype=dtype)
    store.load_state_dict(payload["params"])
    return store, payload["metadata"]
