"""Closed-form sufficient conditions for optimality of the myopic policy."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

from .instance import Instance
from .rewards import check_axioms, delta_bounds, g_derivative_bounds

BUILTIN_KINDS = ("linear", "log", "power")

HOLDS = "holds"
FAILS = "fails"
NOT_FALSIFIED = "not falsified"
INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class QuantitySet:
    p11_max: float
    p01_min: float
    delta_p_max: float
    delta_p_min: float
    g_prime_min: float
    g_prime_max: float
    delta_min: float
    delta_max: float
    c: float


@dataclass
class OptimalityReport:
    quantities: QuantitySet
    theorem1_lhs: float
    theorem1_rhs: float
    theorem1_holds: bool
    theorem2_beta_bound: float
    theorem2_holds: bool
    verdict: str
    notes: str = ""
    counterexample: Optional[dict] = field(default=None)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quantities"] = asdict(self.quantities)
        return d


def compute_quantities(instance: Instance) -> QuantitySet:
    p01, p11 = instance.p01, instance.p11
    gaps = p11 - p01
    # min over channels; the printed definition uses max under a "min" name
    p01_min, p11_max = float(p01.min()), float(p11.max())
    gmin, gmax = g_derivative_bounds(instance.reward, p01_min, p11_max)
    dmin, dmax = delta_bounds(instance.reward, instance.k)
    return QuantitySet(p11_max, p01_min, float(gaps.max()), float(gaps.min()),
                       gmin, gmax, dmin, dmax, instance.reward.c)


def discounted_gap_sum(beta: float, delta_p: float, lo: int, hi: int) -> float:
    """``sum_{i=lo}^{hi} (beta*delta_p)**i`` (empty sum is 0, ``0**0`` is 1)."""
    x = beta * delta_p
    return float(sum(x**i for i in range(lo, hi + 1)))


def _ratio(q: QuantitySet) -> float:
    num, den = q.g_prime_min * q.delta_min, q.g_prime_max * q.delta_max
    return num / den if den > 0 else 0.0


def theorem2_beta_bound(q: QuantitySet) -> float:
    lo, hi = q.g_prime_min * q.delta_min, q.g_prime_max * q.delta_max
    if lo <= 0.0:
        return 0.0
    return lo / ((lo + hi) * q.delta_p_max)


def _evaluate(instance: Instance, axiom_samples: int, infinite: bool) -> OptimalityReport:
    q = compute_quantities(instance)
    lhs = _ratio(q)
    rhs = discounted_gap_sum(instance.beta, q.delta_p_max, 1, instance.T - 1)
    bound = theorem2_beta_bound(q)
    t1 = lhs >= rhs
    t2 = instance.beta <= bound
    notes, counterexample = [], None
    if instance.reward.kind in BUILTIN_KINDS:
        verdict = HOLDS if (t2 if infinite else t1) else FAILS
    else:
        ax = check_axioms(instance.reward, instance.k, samples=axiom_samples)
        if ax.ok:
            verdict = NOT_FALSIFIED
            notes.append("custom reward: axioms not falsified by sampling, not proven")
        else:
            verdict = INDETERMINATE
            counterexample = ax.counterexample
            notes.append(f"reward is not g-regular: {ax.counterexample['axiom']} falsified; "
                         "the closed-form inequality is not used for a verdict")
    return OptimalityReport(q, lhs, rhs, t1, bound, t2, verdict, "; ".join(notes), counterexample)


def theorem1_check(instance: Instance, axiom_samples: int = 10_000) -> OptimalityReport:
    """Finite horizon: ``g'min*Dmin / (g'max*Dmax) >= sum_{i=1}^{T-1} (beta*dp_max)**i``."""
    return _evaluate(instance, axiom_samples, infinite=False)


def theorem2_check(instance: Instance, axiom_samples: int = 10_000) -> OptimalityReport:
    """Infinite horizon: ``beta <= g'min*Dmin / ((g'min*Dmin + g'max*Dmax) * dp_max)``.

    Same report as :func:`theorem1_check`; only ``verdict`` follows the
    infinite-horizon flag instead.
    """
    return _evaluate(instance, axiom_samples, infinite=True)


def theorem1_beta_boundary(instance: Instance, tol: float = 1e-12) -> float:
    """Largest ``beta`` in [0, 1] at which the finite-horizon condition still holds.

    Bisection on the closed form (the right-hand side increases with beta).
    """
    q = compute_quantities(instance)
    lhs = _ratio(q)

    def ok(b):
        return lhs >= discounted_gap_sum(b, q.delta_p_max, 1, instance.T - 1)

    if ok(1.0):
        return 1.0
    if not ok(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo


def iid_special_case_check(instance: Instance) -> Optional[bool]:
    """``eps < p01(1-p11) / (p11(1-p01))`` for identical channels; None when not applicable."""
    if not instance.identical_channels:
        return None
    ch = instance.channels[0]
    threshold = ch.p01 * (1.0 - ch.p11) / (ch.p11 * (1.0 - ch.p01))
    return bool(instance.sensing.epsilon < threshold)


def satisfies_theorem1(instance: Instance) -> bool:
    q = compute_quantities(instance)
    return _ratio(q) >= discounted_gap_sum(instance.beta, q.delta_p_max, 1, instance.T - 1)

