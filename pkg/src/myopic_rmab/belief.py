"""Belief-state arithmetic for two-state Markov channels sensed with errors.

Channel indices are 0-based. An action is a sorted tuple of ``k`` distinct
channel indices; an ACK outcome is the (sorted) tuple of the sensed channels
that returned an ACK.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ChannelModel:
    """Transition pair of a positively correlated Gilbert-Elliott channel.

    ``p01`` is P[good next | bad now], ``p11`` is P[good next | good now].
    """

    p01: float
    p11: float

    def __post_init__(self):
        if not (0.0 <= self.p01 <= 1.0 and 0.0 <= self.p11 <= 1.0):
            raise ValueError(f"transition probabilities must lie in [0, 1], got {self}")
        if not self.p11 > self.p01:
            raise ValueError(f"channel must be positively correlated (p11 > p01), got {self}")
        if 1.0 + self.p01 - self.p11 <= 0.0:
            raise ValueError(f"p01=0, p11=1 has no stationary distribution: {self}")

    @property
    def gap(self) -> float:
        return self.p11 - self.p01


@dataclass(frozen=True)
class SensingModel:
    """System-wide false-alarm rate ``epsilon`` and miss-detection rate ``delta``.

    Only ``epsilon`` enters the belief update and the ACK law; ``delta``
    matters for the channel-level simulator (collisions).
    """

    epsilon: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")


def _check_probability(omega, name="omega"):
    arr = np.asarray(omega, dtype=float)
    if np.any(~((arr >= 0.0) & (arr <= 1.0))):
        raise ValueError(f"{name} must lie in [0, 1], got {omega!r}")
    return arr


def tau(ch: ChannelModel, omega):
    """One-step prediction ``omega*p11 + (1-omega)*p01``."""
    w = _check_probability(omega)
    out = w * ch.p11 + (1.0 - w) * ch.p01
    return out if out.ndim else float(out)


def _phi(epsilon, omega):
    # Unchecked, vectorised. (eps=0, omega=1) is 0/0 and defined as 1.
    omega = np.asarray(omega, dtype=float)
    num = epsilon * omega
    den = num + 1.0 - omega
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 1.0)
    return out if out.ndim else float(out)


def phi(sensing: SensingModel | float, omega):
    """Posterior belief of a sensed channel after a NACK.

    ``phi(w) = eps*w / (eps*w + 1 - w)``; the removable 0/0 at ``eps=0,
    w=1`` is taken as 1.
    """
    epsilon = sensing.epsilon if isinstance(sensing, SensingModel) else float(sensing)
    _check_probability(omega)
    return _phi(epsilon, omega)


def stationary_belief(ch: ChannelModel) -> float:
    return ch.p01 / (1.0 + ch.p01 - ch.p11)


def _as_action(action, n_channels: int | None = None) -> tuple[int, ...]:
    act = tuple(sorted(int(i) for i in action))
    if len(set(act)) != len(act):
        raise ValueError(f"action has repeated channels: {action!r}")
    if act and act[0] < 0:
        raise ValueError(f"negative channel index in action {action!r}")
    if n_channels is not None and act and act[-1] >= n_channels:
        raise ValueError(f"channel index out of range for N={n_channels}: {action!r}")
    return act


def _check_outcome(action: tuple[int, ...], outcome) -> frozenset[int]:
    acked = frozenset(int(i) for i in outcome)
    if not acked <= set(action):
        raise ValueError(f"ACK outcome {sorted(acked)} is not a subset of action {action}")
    return acked


def update_belief(
    belief: Sequence[float],
    channels: Sequence[ChannelModel],
    sensing: SensingModel,
    action,
    outcome,
) -> np.ndarray:
    """Bayes update of the whole belief vector after one slot."""
    omega = _check_probability(belief, "belief")
    if omega.shape != (len(channels),):
        raise ValueError(f"belief has length {omega.size} but there are {len(channels)} channels")
    act = _as_action(action, len(channels))
    acked = _check_outcome(act, outcome)
    out = np.empty_like(omega)
    for i, ch in enumerate(channels):
        if i in acked:
            out[i] = ch.p11
        elif i in act:
            out[i] = ch.p11 * (w := _phi(sensing.epsilon, omega[i])) + ch.p01 * (1.0 - w)
        else:
            out[i] = ch.p11 * omega[i] + ch.p01 * (1.0 - omega[i])
    return out


def outcome_probability(belief, sensing: SensingModel, action, outcome) -> float:
    """Probability of observing exactly ``outcome`` as the ACK set of ``action``."""
    omega = _check_probability(belief, "belief")
    act = _as_action(action, omega.size)
    acked = _check_outcome(act, outcome)
    p = 1.0
    for j in act:
        q = (1.0 - sensing.epsilon) * omega[j]
        p *= q if j in acked else 1.0 - q
    return float(p)


def enumerate_outcomes(action) -> list[tuple[int, ...]]:
    """All ACK subsets of ``action``.

    Order is binary counting with the lowest channel as least significant
    bit, so outcome number ``e`` acks ``action[j]`` iff bit ``j`` of ``e`` is
    set. The planner relies on this numbering.
    """
    act = _as_action(action)
    if not act:
        raise ValueError("an action must sense at least one channel")
    return [tuple(ch for j, ch in enumerate(act) if e >> j & 1) for e in range(1 << len(act))]


def enumerate_actions(n_channels: int, k: int) -> list[tuple[int, ...]]:
    if not 1 <= k <= n_channels:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={n_channels}")
    return list(combinations(range(n_channels), k))
