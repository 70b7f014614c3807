"""Message sampling, cutting, mask wire format, inbox assembly, drop stats.

A message from agent i to agent j is an L-bit real vector sampled from a
Gaussian with mean mu_ij and identity covariance.  Bits whose mean
magnitude falls below a cut threshold are dropped and zero-filled at the
receiver; a boolean mask (wire-encoded as a binary integer) says which
bits were actually sent.  Everything here is a pure function over value
types.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

MAX_MASK_BITS = 62

BY_BIT = "by-bit"
BY_MESSAGE = "by-message"


@dataclass(frozen=True)
class Message:
    values: np.ndarray  # length L, zero where dropped
    mask: np.ndarray    # boolean, True = bit sent
    sender: int
    recipient: int

    def __post_init__(self):
        if self.sender == self.recipient:
            raise ValueError("no self-messages")
        assert np.all(self.values[~self.mask] == 0.0)


@dataclass
class CutPolicy:
    """How (and whether) to drop message bits at execution time.

    mode 'none' sends everything; 'threshold' keeps bits with
    |mean| >= threshold; 'drop-rate' uses a threshold calibrated to hit
    `target_drop_rate` (see `calibrate_threshold`, stored back into
    `threshold`).
    """

    mode: str = "none"  # none | threshold | drop-rate
    threshold: float = 0.0
    target_drop_rate: float = 0.0
    rate_scope: str = BY_BIT

    def __post_init__(self):
        if self.mode not in ("none", "threshold", "drop-rate"):
            raise ValueError(f"unknown cut mode {self.mode!r}")
        if self.rate_scope not in (BY_BIT, BY_MESSAGE):
            raise ValueError(f"unknown rate scope {self.rate_scope!r}")
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        if not 0.0 <= self.target_drop_rate <= 1.0:
            raise ValueError("target_drop_rate must be in [0, 1]")


def sample_message(means: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw message values: mean plus unit-variance Gaussian noise per bit."""
    means = np.asarray(means, dtype=np.float64)
    return means + rng.standard_normal(means.shape)


def cut(means: np.ndarray, values: np.ndarray, policy: CutPolicy,
        sender: int = 0, recipient: int = 1) -> Message:
    """Drop low-|mean| bits of one message and zero-fill them.

    In by-message scope the whole message is dropped only when every bit
    falls below the threshold; otherwise it is sent in full.
    """
    means = np.asarray(means, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if policy.mode == "none":
        mask = np.ones(means.shape, dtype=bool)
    else:
        above = np.abs(means) >= policy.threshold
        if policy.rate_scope == BY_MESSAGE:
            mask = np.full(means.shape, bool(above.any()))
        else:
            mask = above
    return Message(values=np.where(mask, values, 0.0), mask=mask,
                   sender=sender, recipient=recipient)


def calibrate_threshold(mean_magnitude_samples, target_drop_rate: float,
                        rate_scope: str = BY_BIT) -> float:
    """Empirical-quantile threshold hitting a target drop rate.

    For by-message scope the caller supplies per-message max-|mean|
    samples; the quantile computation itself is scope-agnostic.
    """
    samples = np.asarray(mean_magnitude_samples, dtype=np.float64).ravel()
    if samples.size == 0:
        raise ValueError("cannot calibrate a threshold from an empty sample collection")
    if target_drop_rate <= 0.0:
        return 0.0
    if target_drop_rate >= 1.0:
        return np.inf
    return float(np.quantile(samples, target_drop_rate))


def encode_mask(mask) -> int:
    """Pack a boolean mask into an integer, bit 0 = first message bit."""
    mask = np.asarray(mask, dtype=bool)
    if mask.size > MAX_MASK_BITS:
        raise ValueError(f"mask wider than {MAX_MASK_BITS} bits")
    out = 0
    for b, sent in enumerate(mask):
        if sent:
            out |= 1 << b
    return out


def decode_mask(encoded: int, length: int) -> np.ndarray:
    if length > MAX_MASK_BITS:
        raise ValueError(f"mask wider than {MAX_MASK_BITS} bits")
    return np.array([(encoded >> b) & 1 == 1 for b in range(length)])


def assemble_inbox(messages: list[Message], recipient: int, n_agents: int,
                   msg_len: int) -> np.ndarray:
    """Concatenate one message per sender in ascending sender-id order."""
    by_sender = {}
    for msg in messages:
        if msg.recipient != recipient:
            raise ValueError(f"message for {msg.recipient} in inbox of {recipient}")
        if msg.sender in by_sender:
            raise ValueError(f"duplicate message from sender {msg.sender}")
        by_sender[msg.sender] = msg
    expected = [i for i in range(n_agents) if i != recipient]
    if sorted(by_sender) != expected:
        raise ValueError(f"expected senders {expected}, got {sorted(by_sender)}")
    if n_agents == 1:
        return np.zeros(0)
    return np.concatenate([by_sender[i].values for i in expected])


def drop_stats(masks) -> tuple[float, float, int]:
    """(by-message drop rate, by-bit drop rate, total bits sent).

    `masks` is an array of boolean bit masks with the last axis being the
    bit axis — one row per (episode, t, sender, recipient) record.
    """
    masks = np.asarray(masks, dtype=bool)
    flat = masks.reshape(-1, masks.shape[-1])
    if flat.size == 0:
        return 0.0, 0.0, 0
    by_message = float(np.mean(~flat.any(axis=1)))
    by_bit = float(np.mean(~flat))
    return by_message, by_bit, int(flat.sum())


@dataclass
class MessageRecord:
    """One dumped message: the CSV row unit of the message-dump format."""

    episode: int
    t: int
    sender: int
    recipient: int
    means: np.ndarray
    mask: np.ndarray
    values: np.ndarray


def write_message_dump(records: list[MessageRecord], path) -> None:
    """CSV dump, one row per (episode, t, sender, recipient).

    Bit columns are ordered to match `encode_mask` bit order.
    """
    if not records:
        raise ValueError("no message records to dump")
    msg_len = len(records[0].means)
    header = (["episode", "t", "i", "j"]
              + [f"mu_{b}" for b in range(msg_len)]
              + ["mask"]
              + [f"value_{b}" for b in range(msg_len)])
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for r in records:
            writer.writerow(
                [r.episode, r.t, r.sender, r.recipient]
                + [repr(float(x)) for x in r.means]
                + [encode_mask(r.mask)]
                + [repr(float(x)) for x in r.values]
            )


def read_message_dump(path) -> list[MessageRecord]:
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    header, body = rows[0], rows[1:]
    msg_len = sum(1 for c in header if c.startswith("mu_"))
    out = []
    for row in body:
        episode, t, i, j = (int(x) for x in row[:4])
        means = np.array([float(x) for x in row[4:4 + msg_len]])
        mask = decode_mask(int(row[4 + msg_len]), msg_len)
        values = np.array([float(x) for x in row[5 + msg_len:5 + 2 * msg_len]])
        out.append(MessageRecord(episode, t, i, j, means, mask, values))
    return out
