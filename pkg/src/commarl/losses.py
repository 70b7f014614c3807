"""TD loss, expressiveness loss, succinctness loss, and their weighted total.

The overall training loss is

    total = td + lambda * (expressiveness + beta * succinctness)

where expressiveness is a cross-entropy between the greedy action under
full communication and the variational posterior's prediction from local
history plus received messages, and succinctness is the closed-form KL
from each identity-covariance message Gaussian to the standard normal,
||mu||^2 / 2.

All three terms are computed from one batched recurrent unroll over the
stored episodes; message values are re-sampled fresh (reparameterized)
so gradients flow into the encoder through both the TD path and the
communication path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F

from .model import ModelSpec, ParamStore


@dataclass
class Hyperparams:
    gamma: float = 0.99
    beta: float = 1e-5
    lamda: float = 0.1
    msg_len: int = 3
    lr: float = 5e-4
    batch_size: int = 32
    target_sync_interval: int = 200  # training updates between target syncs
    grad_norm_clip: float = 10.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_anneal_steps: int = 50_000

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.beta < 0 or self.lamda < 0:
            raise ValueError("beta and lamda must be >= 0")
        if self.msg_len < 0:
            raise ValueError("msg_len must be >= 0")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must be <= eps_start")


@dataclass
class LossReport:
    total: float
    td: float
    expressiveness: float
    succinctness: float
    grad_norm: float = 0.0


def epsilon_at(hyper: Hyperparams, env_steps: int) -> float:
    """Piecewise-linear exploration schedule."""
    slope = (hyper.eps_start - hyper.eps_end) / max(hyper.eps_anneal_steps, 1)
    return max(hyper.eps_end, hyper.eps_start - env_steps * slope)


def recipient_index_maps(n_agents: int):
    """Index tensors turning sender-major message values into inboxes.

    For values[..., i, r, :] (r-th recipient head of sender i), returns
    (sender_idx, slot_idx) of shape [n, n-1] such that
    values[..., sender_idx[j, s], slot_idx[j, s], :] is the message from
    the s-th (ascending-id) sender into agent j's inbox.
    """
    senders, slots = [], []
    for j in range(n_agents):
        row_s, row_r = [], []
        for i in range(n_agents):
            if i == j:
                continue
            row_s.append(i)
            row_r.append(j - (1 if j > i else 0))
        senders.append(row_s)
        slots.append(row_r)
    return torch.tensor(senders, dtype=torch.long), torch.tensor(slots, dtype=torch.long)


def messages_to_inboxes(values: torch.Tensor) -> torch.Tensor:
    """[..., n, n-1, L] sender-major values -> [..., n, (n-1)*L] inboxes.

    Inbox layout: messages concatenated in ascending sender-id order.
    """
    n = values.shape[-3]
    if n == 1 or values.shape[-1] == 0:
        return values.new_zeros(*values.shape[:-3], n, (n - 1) * values.shape[-1])
    sender_idx, slot_idx = recipient_index_maps(n)
    gathered = values[..., sender_idx, slot_idx, :]  # [..., n, n-1, L]
    return gathered.reshape(*gathered.shape[:-2], -1)


@dataclass
class EpisodeBatch:
    """Padded batch of episodes as torch tensors.

    Shapes: obs [B,T+1,n,obs_dim], state [B,T+1,state_dim],
    avail [B,T+1,n,A] (bool), actions [B,T,n] (long), reward [B,T],
    terminated [B,T] (float 0/1), mask [B,T] (float 0/1 step validity).
    """

    obs: torch.Tensor
    state: torch.Tensor
    avail: torch.Tensor
    actions: torch.Tensor
    reward: torch.Tensor
    terminated: torch.Tensor
    mask: torch.Tensor

    @property
    def batch_size(self) -> int:
        return self.obs.shape[0]

    @property
    def max_t(self) -> int:
        return self.actions.shape[1]

    def to_dtype(self, dtype):
        return EpisodeBatch(
            obs=self.obs.to(dtype), state=self.state.to(dtype),
            avail=self.avail, actions=self.actions,
            reward=self.reward.to(dtype), terminated=self.terminated.to(dtype),
            mask=self.mask.to(dtype),
        )


def _ids_onehot(spec: ModelSpec, batch: int, dtype) -> torch.Tensor:
    return torch.eye(spec.n_agents, dtype=dtype).expand(batch, -1, -1)


def unroll(agent, encoder, batch: EpisodeBatch, spec: ModelSpec, steps: int,
           noise: torch.Tensor | None):
    """Run the recurrent networks over `steps` timesteps of a batch.

    Per step the recurrent state is first advanced with a zeroed inbox
    slot to summarize the new observation, messages are encoded from
    that pre-inbox state and sampled (values = means + noise; pass
    noise=None for noise-free values), inboxes are assembled, and the
    same recurrent cell is re-run with the real inbox to produce the Q
    values and the committed hidden state.

    Returns dict of stacked tensors over time: q [B,steps,n,A],
    means [B,steps,n,n-1,L], inbox [B,steps,n,(n-1)L], hidden (committed)
    [B,steps,n,H].
    """
    bs = batch.batch_size
    dtype = batch.obs.dtype
    ids = _ids_onehot(spec, bs, dtype)
    flat_ids = ids.reshape(bs * spec.n_agents, spec.n_agents)
    hidden = agent.initial_hidden(bs * spec.n_agents)
    zero_inbox = batch.obs.new_zeros(bs * spec.n_agents, spec.inbox_dim)

    qs, means_t, inbox_t, hidden_t = [], [], [], []
    for t in range(steps):
        obs = batch.obs[:, t].reshape(bs * spec.n_agents, -1)
        if t == 0:
            last_a = batch.obs.new_zeros(bs, spec.n_agents, spec.n_actions)
        else:
            last_a = F.one_hot(batch.actions[:, t - 1], spec.n_actions).to(dtype)
        last_a = last_a.reshape(bs * spec.n_agents, -1)

        _, pre_hidden = agent(obs, last_a, flat_ids, zero_inbox, hidden)
        means = encoder(pre_hidden, flat_ids).view(
            bs, spec.n_agents, spec.n_agents - 1, spec.msg_len)
        values = means if noise is None else means + noise[:, t]
        inbox = messages_to_inboxes(values).reshape(bs * spec.n_agents, -1)
        q, hidden = agent(obs, last_a, flat_ids, inbox, hidden)

        qs.append(q.view(bs, spec.n_agents, -1))
        means_t.append(means)
        inbox_t.append(inbox.view(bs, spec.n_agents, -1))
        hidden_t.append(hidden.view(bs, spec.n_agents, -1))

    return {
        "q": torch.stack(qs, dim=1),
        "means": torch.stack(means_t, dim=1),
        "inbox": torch.stack(inbox_t, dim=1),
        "hidden": torch.stack(hidden_t, dim=1),
    }


def draw_message_noise(batch: EpisodeBatch, spec: ModelSpec, steps: int,
                       generator: torch.Generator | None) -> torch.Tensor:
    shape = (batch.batch_size, steps, spec.n_agents, spec.n_agents - 1, spec.msg_len)
    return torch.randn(shape, dtype=batch.obs.dtype, generator=generator)


def _masked_q(q: torch.Tensor, avail: torch.Tensor) -> torch.Tensor:
    return q.masked_fill(~avail, -1e10)


def td_loss(batch: EpisodeBatch, store: ParamStore, hyper: Hyperparams,
            generator: torch.Generator | None = None) -> torch.Tensor:
    """Mean squared TD error over valid timesteps.

    The max over joint next actions is realized as per-agent argmax on
    the target networks and then mixed, which is exact under the
    monotone mixer.  Terminal steps use a zero bootstrap; truncated
    steps bootstrap normally.
    """
    loss, _, _, _ = _td_components(batch, store, hyper, generator)
    return loss


def _td_components(batch, store, hyper, generator):
    if batch.max_t == 0 or batch.batch_size == 0:
        raise ValueError("td_loss needs a nonempty batch of nonempty episodes")
    spec = store.spec
    T = batch.max_t
    noise = draw_message_noise(batch, spec, T + 1, generator)
    live = unroll(store.agent, store.encoder, batch, spec, T, noise[:, :T])
    with torch.no_grad():
        tgt = unroll(store.target_agent, store.target_encoder, batch, spec,
                     T + 1, noise)

    chosen = torch.gather(live["q"], 3, batch.actions.unsqueeze(-1)).squeeze(-1)
    q_tot = store.mixer(chosen, batch.state[:, :T])

    with torch.no_grad():
        tgt_q_next = _masked_q(tgt["q"][:, 1:T + 1], batch.avail[:, 1:T + 1])
        tgt_best = tgt_q_next.max(dim=3).values
        tgt_tot = store.target_mixer(tgt_best, batch.state[:, 1:T + 1])
        targets = batch.reward + hyper.gamma * (1.0 - batch.terminated) * tgt_tot

    sq_err = (q_tot - targets) ** 2
    loss = (sq_err * batch.mask).sum() / batch.mask.sum()
    return loss, live, noise, chosen


def cross_entropy_onehot(probs: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """-log q(label) per element, numerically floored."""
    picked = torch.gather(probs, -1, labels.unsqueeze(-1)).squeeze(-1)
    return -torch.log(picked.clamp_min(1e-12))


def expressiveness_loss(batch: EpisodeBatch, store: ParamStore, hyper: Hyperparams,
                        generator: torch.Generator | None = None,
                        live: dict | None = None) -> torch.Tensor:
    """Cross-entropy between the full-communication greedy action and the
    variational posterior's prediction, averaged over agents and steps.

    The label is the one-hot greedy action of the live Q network under
    the full (uncut) inbox, with no gradient through the label.  Always
    evaluated on the uncut inbox regardless of any execution cut policy.
    """
    spec = store.spec
    T = batch.max_t
    if live is None:
        noise = draw_message_noise(batch, spec, T, generator)
        live = unroll(store.agent, store.encoder, batch, spec, T, noise)

    with torch.no_grad():
        labels = _masked_q(live["q"], batch.avail[:, :T]).argmax(dim=3)

    probs = store.posterior(live["hidden"], live["inbox"])
    ce = cross_entropy_onehot(probs, labels)  # [B, T, n]
    mask = batch.mask.unsqueeze(-1)
    return (ce * mask).sum() / (mask.sum() * spec.n_agents)


def succinctness_loss(means: torch.Tensor, mask: torch.Tensor | None = None) -> torch.Tensor:
    """Mean over messages of KL(N(mu, I) || N(0, I)) = ||mu||^2 / 2."""
    kl = 0.5 * (means ** 2).sum(dim=-1)  # [..., n, n-1]
    if mask is None:
        return kl.mean()
    per_step = kl.mean(dim=(-2, -1))  # mean over (sender, recipient)
    return (per_step * mask).sum() / mask.sum()


def total_loss(batch: EpisodeBatch, store: ParamStore, hyper: Hyperparams,
               generator: torch.Generator | None = None
               ) -> tuple[torch.Tensor, LossReport]:
    """Overall loss: td + lambda * (expressiveness + beta * succinctness).

    One fresh reparameterized message sample is shared by the TD path
    and the communication path, so the encoder receives both gradients.
    """
    td, live, _, _ = _td_components(batch, store, hyper, generator)
    if hyper.lamda > 0 and store.spec.inbox_dim > 0:
        ce = expressiveness_loss(batch, store, hyper, live=live)
        kl = succinctness_loss(live["means"], mask=batch.mask)
    else:
        ce = td.new_zeros(())
        kl = td.new_zeros(())
    total = td + hyper.lamda * (ce + hyper.beta * kl)
    if not torch.isfinite(total):
        raise FloatingPointError(
            f"non-finite loss: td={td.item()} ce={ce.item()} kl={kl.item()}")
    report = LossReport(total=total.item(), td=td.item(),
                        expressiveness=ce.item(), succinctness=kl.item())
    return total, report
