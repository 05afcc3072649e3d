"""Randomised verification suites.

Each suite yields one :class:`TrialResult` per trial. Trial ``i`` of suite
``s`` draws everything from ``trial_rng(seed, s, i)``, so a failing trial
can be replayed from its printed seed and index alone.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterator, Optional

import numpy as np

from .conditions import compute_quantities, satisfies_theorem1
from .config import InstanceGenerator, instance_to_doc, trial_rng
from .instance import Instance
from .planner import (
    lemma4_bound_check, lemma5_check, myopic_value, optimal_value, symmetry_check,
)
from .rewards import check_axioms, make_reward

SUITES = ("axioms", "lemma4", "lemma5", "symmetry", "optimality")
OPTIMALITY_RTOL = 1e-9


@dataclass
class TrialResult:
    suite: str
    trial: int
    N: int
    k: int
    T: int
    beta: float
    epsilon: float
    delta: float
    delta_p_max: float
    reward_kind: str
    case: str
    value: float
    lower: float
    upper: float
    margin: float
    passed: bool
    instance: Optional[dict] = field(default=None, repr=False)
    detail: dict = field(default_factory=dict, repr=False)

    def row(self) -> dict:
        d = asdict(self)
        d.pop("instance")
        d.pop("detail")
        return d


def _result(suite, trial, inst: Instance, case, value, lower, upper, margin, passed, detail=None):
    return TrialResult(suite, trial, inst.N, inst.k, inst.T, inst.beta, inst.sensing.epsilon,
                       inst.sensing.delta, float((inst.p11 - inst.p01).max()), inst.reward.label,
                       case, float(value), float(lower), float(upper), float(margin), bool(passed),
                       instance_to_doc(inst), detail or {})


def axioms_suite(seed: int = 0, samples: int = 10_000, ks=(1, 2, 3, 4)) -> Iterator[TrialResult]:
    """Symmetry, monotonicity and g-decomposition of the built-in rewards."""
    rewards = [make_reward("linear", epsilon=0.1), make_reward("log", 2.0), make_reward("log", 10.0),
               make_reward("power", 2.0), make_reward("power", 0.5), make_reward("power", 3.0)]
    trial = 0
    for r in rewards:
        for k in ks:
            rep = check_axioms(r, k, samples, trial_rng(seed, "axioms", trial))
            case = f"sym={rep.symmetric} mono={rep.monotone} g_inc={rep.g_increasing}"
            yield TrialResult("axioms", trial, k, k, 1, math.nan, 0.1 if r.kind == "linear" else math.nan,
                              math.nan, math.nan, r.label, case, rep.max_residual, 0.0, 1e-12,
                              1e-12 - rep.max_residual, rep.ok, None,
                              {"counterexample": rep.counterexample})
            trial += 1


def _interval(inst: Instance):
    return float(inst.p01.min()), float(inst.p11.max())


def lemma4_suite(trials: int = 500, seed: int = 0, gen: InstanceGenerator | None = None,
                 slack: float = 1e-10) -> Iterator[TrialResult]:
    gen = gen or InstanceGenerator(rewards=("linear", "log", "power"))
    for i in range(trials):
        rng = trial_rng(seed, "lemma4", i)
        inst = gen.sample(rng)
        lo, hi = _interval(inst)
        belief = rng.uniform(lo, hi, size=inst.N)
        l = int(rng.integers(inst.N))
        w, w2 = np.sort(rng.uniform(lo, hi, size=2))
        t = int(rng.integers(1, inst.T + 1))
        rep = lemma4_bound_check(inst, t, l, float(w), float(w2), belief, slack=slack)
        yield _result("lemma4", i, inst, rep.case, rep.value, rep.lower, rep.upper, rep.margin,
                      rep.holds, rep.context)


def lemma5_suite(trials: int = 200, seed: int = 0, gen: InstanceGenerator | None = None,
                 slack: float = 1e-10, max_attempts: int = 1000) -> Iterator[TrialResult]:
    """Trials are redrawn until the instance meets the premise (the finite-horizon condition)."""
    gen = gen or InstanceGenerator(rewards=("linear", "log", "power"), min_extra_channels=1)
    for i in range(trials):
        rng = trial_rng(seed, "lemma5", i)
        for _ in range(max_attempts):
            inst = gen.sample(rng)
            if inst.N > inst.k and satisfies_theorem1(inst):
                break
        else:
            raise RuntimeError(f"lemma5 trial {i}: no premise-satisfying instance in {max_attempts} draws")
        lo, hi = _interval(inst)
        belief = rng.uniform(lo, hi, size=inst.N)
        l, m = (int(x) for x in rng.choice(inst.N, 2, replace=False))
        if belief[l] < belief[m]:
            l, m = m, l
        others = [j for j in range(inst.N) if j not in (l, m)]
        rest = [int(x) for x in rng.choice(others, inst.k - 1, replace=False)] if inst.k > 1 else []
        t = int(rng.integers(1, inst.T + 1))
        rep = lemma5_check(inst, t, belief, l, m, rest, slack=slack)
        yield _result("lemma5", i, inst, rep.case, rep.value, rep.lower, rep.upper, rep.margin,
                      rep.holds, rep.context)


def symmetry_suite(trials: int = 200, seed: int = 0, gen: InstanceGenerator | None = None,
                   tol: float = 1e-12) -> Iterator[TrialResult]:
    gen = gen or InstanceGenerator(rewards=("linear", "log", "power"))
    for i in range(trials):
        rng = trial_rng(seed, "symmetry", i)
        while True:
            inst = gen.sample(rng)
            if inst.k >= 2 or inst.N - inst.k >= 2:
                break
        lo, hi = _interval(inst)
        belief = rng.uniform(lo, hi, size=inst.N)
        action = sorted(int(x) for x in rng.choice(inst.N, inst.k, replace=False))
        inside = inst.k >= 2 and (inst.N - inst.k < 2 or rng.random() < 0.5)
        pool = action if inside else [j for j in range(inst.N) if j not in action]
        a, b = (int(x) for x in rng.choice(pool, 2, replace=False))
        t = int(rng.integers(1, inst.T + 1))
        rep = symmetry_check(inst, t, belief, action, a, b, tol=tol)
        yield _result("symmetry", i, inst, rep.case, rep.value, rep.lower, rep.upper, rep.margin,
                      rep.holds, rep.context)


def optimality_trial(inst: Instance, rtol: float = OPTIMALITY_RTOL) -> tuple:
    """Compare myopic with the exact optimum at the root and at every node of the tree."""
    rep = optimal_value(inst, check_myopic=True)
    vm = myopic_value(inst)
    gap = rep.value - vm
    rel = gap / max(1.0, abs(rep.value))
    ok = rep.myopic_violations == 0 and rel <= rtol
    return rep, vm, rel, ok


def optimality_suite(required: int = 200, seed: int = 0, gen: InstanceGenerator | None = None,
                     rewards=("linear", "log", "power"), filter_condition: bool = True,
                     max_attempts: int = 100_000) -> Iterator[TrialResult]:
    """``required`` condition-satisfying instances per reward kind."""
    gen = gen or InstanceGenerator()
    for kind in rewards:
        found, attempt = 0, 0
        while found < required:
            if attempt >= max_attempts:
                raise RuntimeError(f"optimality/{kind}: only {found} instances satisfied the condition")
            rng = trial_rng(seed, f"opt-{kind}", attempt)
            attempt += 1
            inst = gen.sample(rng, reward=kind)
            if filter_condition and not satisfies_theorem1(inst):
                continue
            rep, vm, rel, ok = optimality_trial(inst)
            q = compute_quantities(inst)
            case = f"nodes={rep.nodes_checked} violations={rep.myopic_violations}"
            margin = min(OPTIMALITY_RTOL - rel, rep.worst_myopic_margin)
            detail = {"V_optimal": rep.value, "V_myopic": vm, "first_actions": rep.first_actions,
                      "delta_p_max": q.delta_p_max, "attempt": attempt - 1}
            yield _result("optimality", attempt - 1, inst, case, rel, -math.inf, OPTIMALITY_RTOL,
                          margin, ok, detail)
            found += 1


def run_suite(name: str, seed: int = 0, trials: Optional[int] = None,
              gen: InstanceGenerator | None = None, **kw) -> Iterator[TrialResult]:
    if name == "axioms":
        return axioms_suite(seed, **kw)
    if name == "lemma4":
        return lemma4_suite(trials or 500, seed, gen, **kw)
    if name == "lemma5":
        return lemma5_suite(trials or 200, seed, gen, **kw)
    if name == "symmetry":
        return symmetry_suite(trials or 200, seed, gen, **kw)
    if name == "optimality":
        return optimality_suite(trials or 200, seed, gen, **kw)
    raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
