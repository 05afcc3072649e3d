"""g-regular slot rewards.

A reward is a symmetric, coordinate-wise increasing function ``F`` of the
beliefs of the ``k`` sensed channels that decomposes as

    F(.., w, ..) = c*g(w)*F(.., 1, ..) + c*(1 - g(w))*F(.., 0, ..)

for a continuous increasing ``g`` and a constant ``c``. ``F`` is called on
arrays whose last axis holds the ``k`` sensed beliefs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Optional

import numpy as np

FD_STEP = 1e-6
FD_GRID = 1025
FD_WIDEN = 0.01
DELTA_GRID = 33
DELTA_MAX_AXES = 4


def _sym_sum(terms):
    # sorting first makes the float sum independent of argument order
    return np.sum(np.sort(terms, axis=-1), axis=-1)


class AnalyticDeltaRequired(ValueError):
    """Raised when a custom reward's Delta bounds would need a grid of more than 4 axes."""


@dataclass(frozen=True)
class RegularReward:
    kind: str
    F: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    g: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    c: float = 1.0
    param: Optional[float] = None
    # analytic helpers; None means "fall back to numerics"
    g_prime: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)
    g_prime_increasing: Optional[bool] = field(default=None, repr=False)
    delta: Optional[float] = None

    @property
    def label(self) -> str:
        return self.kind if self.param is None else f"{self.kind}({self.param:g})"

    def __call__(self, w) -> np.ndarray:
        return self.F(np.asarray(w, dtype=float))


def linear_reward(epsilon: float = 0.0) -> RegularReward:
    """Expected number of successful transmissions, ``sum (1-eps)*w``."""
    scale = 1.0 - epsilon
    return RegularReward(
        kind="linear",
        F=lambda w: scale * _sym_sum(w),
        g=lambda x: np.asarray(x, dtype=float),
        c=1.0,
        g_prime=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        g_prime_increasing=True,
        delta=scale,
    )


def log_reward(a: float = 2.0) -> RegularReward:
    """``sum log_a(1 + w)`` with ``g(w) = log2(1 + w)`` and ``c = 1``."""
    if not a > 1.0:
        raise ValueError(f"log reward needs base a > 1, got {a}")
    ln_a = math.log(a)
    return RegularReward(
        kind="log",
        param=float(a),
        F=lambda w: _sym_sum(np.log1p(w)) / ln_a,
        g=lambda x: np.log2(1.0 + np.asarray(x, dtype=float)),
        c=1.0,
        g_prime=lambda x: 1.0 / ((1.0 + np.asarray(x, dtype=float)) * math.log(2.0)),
        g_prime_increasing=False,
        delta=math.log(2.0) / ln_a,
    )


def power_reward(a: float = 2.0) -> RegularReward:
    """``sum w**a`` with ``g(w) = w**a`` and ``c = 1``."""
    if not a > 0.0:
        raise ValueError(f"power reward needs a > 0, got {a}")

    def g_prime(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return a * np.power(x, a - 1.0)

    return RegularReward(
        kind="power",
        param=float(a),
        F=lambda w: _sym_sum(np.power(w, a)),
        g=lambda x: np.power(np.asarray(x, dtype=float), a),
        c=1.0,
        g_prime=g_prime,
        g_prime_increasing=a >= 1.0,
        delta=1.0,
    )


def custom_reward(F, g, c: float = 1.0, name: str = "custom") -> RegularReward:
    """Wrap a user-supplied ``F``/``g`` pair. Axioms are only checked by sampling.

    ``F`` should reduce over the last axis; one that collapses a whole batch
    (e.g. ``np.sum(w)``) is re-applied row by row.
    """
    def batched(w):
        out = np.asarray(F(w), dtype=float)
        if w.ndim > 1 and out.shape != w.shape[:-1]:
            out = np.array([float(F(row)) for row in w.reshape(-1, w.shape[-1])]).reshape(w.shape[:-1])
        return out

    return RegularReward(kind=name, F=batched, g=g, c=float(c))


def make_reward(kind: str, a: float | None = None, epsilon: float = 0.0) -> RegularReward:
    if kind == "linear":
        return linear_reward(epsilon)
    if kind == "log":
        return log_reward(2.0 if a is None else a)
    if kind == "power":
        return power_reward(2.0 if a is None else a)
    raise ValueError(f"unknown reward kind {kind!r}; expected linear, log or power")


def immediate_reward(reward: RegularReward, belief, action) -> float:
    omega = np.asarray(belief, dtype=float)
    return float(reward(omega[list(action)]))


def decomposition_residual(reward: RegularReward, belief_sub, i: int) -> float:
    """Absolute error of the g-decomposition identity at coordinate ``i``."""
    w = np.array(belief_sub, dtype=float)
    if not 0 <= i < w.size:
        raise IndexError(f"coordinate {i} outside a {w.size}-vector")
    hi, lo = w.copy(), w.copy()
    hi[i], lo[i] = 1.0, 0.0
    gw = float(reward.g(w[i]))
    rhs = reward.c * gw * float(reward(hi)) + reward.c * (1.0 - gw) * float(reward(lo))
    return abs(float(reward(w)) - rhs)


def _numeric_g_prime(g, lo: float, hi: float) -> np.ndarray:
    x = np.linspace(lo, hi, FD_GRID)
    left = np.clip(x - FD_STEP, 0.0, 1.0)
    right = np.clip(x + FD_STEP, 0.0, 1.0)
    return (np.asarray(g(right), dtype=float) - np.asarray(g(left), dtype=float)) / (right - left)


def g_derivative_bounds(reward: RegularReward, lo: float, hi: float) -> tuple[float, float]:
    """Min and max of ``dg/dw`` over ``[lo, hi]``.

    Built-ins have monotone derivatives so the endpoints suffice. Custom
    rewards use central differences on a 1025-point grid, widened by 1% so
    the optimality check errs toward "not proven".
    """
    if not 0.0 <= lo <= hi <= 1.0:
        raise ValueError(f"need 0 <= lo <= hi <= 1, got [{lo}, {hi}]")
    if reward.g_prime is not None and reward.g_prime_increasing is not None:
        d_lo, d_hi = float(reward.g_prime(lo)), float(reward.g_prime(hi))
        return (d_lo, d_hi) if reward.g_prime_increasing else (d_hi, d_lo)
    d = _numeric_g_prime(reward.g, lo, hi)
    d_min, d_max = float(d.min()), float(d.max())
    return d_min - FD_WIDEN * abs(d_min), d_max + FD_WIDEN * abs(d_max)


def delta_bounds(reward: RegularReward, k: int) -> tuple[float, float]:
    """Min and max over the other ``k-1`` beliefs of ``F(1, w) - F(0, w)``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if reward.delta is not None:
        return reward.delta, reward.delta
    axes = k - 1
    if axes > DELTA_MAX_AXES:
        raise AnalyticDeltaRequired(
            f"custom reward with k={k} needs a {DELTA_GRID}^{axes} grid; supply an analytic Delta"
        )
    grid = np.linspace(0.0, 1.0, DELTA_GRID)
    if axes == 0:
        return (float(reward(np.ones(1))) - float(reward(np.zeros(1))),) * 2
    rest = np.stack(np.meshgrid(*([grid] * axes), indexing="ij"), axis=-1).reshape(-1, axes)
    ones = np.ones((rest.shape[0], 1))
    diff = reward(np.hstack([ones, rest])) - reward(np.hstack([0.0 * ones, rest]))
    diff = np.atleast_1d(np.asarray(diff, dtype=float))
    return float(diff.min()), float(diff.max())


@dataclass
class AxiomReport:
    symmetric: bool
    monotone: bool
    max_residual: float
    g_increasing: bool
    counterexample: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.symmetric and self.monotone and self.g_increasing and self.max_residual <= 1e-12


def check_axioms(reward: RegularReward, k: int, samples: int = 10_000,
                 rng: np.random.Generator | None = None) -> AxiomReport:
    """Try to falsify the three axioms on random points.

    Passing means "not falsified", never "proven".
    """
    rng = np.random.default_rng(0) if rng is None else rng
    w = rng.random((samples, k))
    base = np.asarray(reward(w), dtype=float)
    counterexample = None

    symmetric = True
    perms = list(permutations(range(k)))
    if len(perms) > 24:
        perms = [tuple(rng.permutation(k)) for _ in range(24)]
    for p in perms:
        bad = np.nonzero(np.asarray(reward(w[:, list(p)]), dtype=float) != base)[0]
        if bad.size:
            symmetric = False
            counterexample = {"axiom": "symmetry", "point": w[bad[0]].tolist(), "permutation": list(p)}
            break

    monotone = True
    i = rng.integers(0, k, size=samples)
    rows = np.arange(samples)
    raised = w.copy()
    raised[rows, i] = w[rows, i] + (1.0 - w[rows, i]) * rng.uniform(0.01, 1.0, size=samples)
    bad = np.nonzero(~(np.asarray(reward(raised), dtype=float) > base))[0]
    if bad.size:
        monotone = False
        counterexample = counterexample or {
            "axiom": "monotonicity", "point": w[bad[0]].tolist(),
            "raised": raised[bad[0]].tolist(),
        }

    hi, lo = w.copy(), w.copy()
    hi[rows, i], lo[rows, i] = 1.0, 0.0
    gw = np.asarray(reward.g(w[rows, i]), dtype=float)
    rhs = reward.c * gw * reward(hi) + reward.c * (1.0 - gw) * reward(lo)
    resid = np.abs(base - rhs)
    max_residual = float(resid.max())
    if max_residual > 1e-12 and counterexample is None:
        j = int(resid.argmax())
        counterexample = {"axiom": "g-decomposability", "point": w[j].tolist(),
                          "coordinate": int(i[j]), "residual": max_residual}

    x = np.linspace(0.0, 1.0, FD_GRID)
    gx = np.asarray(reward.g(x), dtype=float)
    g_increasing = bool(np.all(np.diff(gx) > 0.0) and gx[0] >= 0.0)
    if not g_increasing and counterexample is None:
        counterexample = {"axiom": "g increasing and non-negative"}

    return AxiomReport(symmetric, monotone, max_residual, g_increasing, counterexample)
