"""Exact finite-horizon evaluation over the belief decision tree.

The tree is expanded level by level as numpy batches; beliefs are never
merged or hashed. From a node, action ``a`` and ACK outcome ``e`` lead to
child ``(node*M + a)*E + e`` when every action is expanded (``M`` actions,
``E = 2**k`` outcomes), or ``node*E + e`` when a policy picks one action.

Slots in the public API are 1-based (``1 <= t <= T``); ``W_t`` always
covers slots ``t..T``.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .belief import enumerate_actions
from .instance import Instance
from .policy import MyopicPolicy, myopic_actions

DEFAULT_NODE_CAP = 10**8
LEAF_CHUNK = 1 << 18
TIE_TOL = 1e-12


class NodeCapExceeded(RuntimeError):
    def __init__(self, message, count):
        super().__init__(message)
        self.count = count


def node_cap() -> float:
    return float(os.environ.get("RMAB_NODE_CAP", DEFAULT_NODE_CAP))


def estimated_nodes(instance: Instance, horizon: int | None = None) -> int:
    T = instance.T if horizon is None else horizon
    return (math.comb(instance.N, instance.k) * (1 << instance.k)) ** T


def tree_node_count(instance: Instance, horizon: int | None = None) -> int:
    """Belief nodes in the fully expanded tree: one root plus all descendants down to slot T."""
    T = instance.T if horizon is None else horizon
    b = math.comb(instance.N, instance.k) * (1 << instance.k)
    return sum(b**t for t in range(T))


class _Tree:
    """Action/outcome tables shared by all expansions of one instance."""

    def __init__(self, instance: Instance):
        self.instance = instance
        N, k = instance.N, instance.k
        self.N, self.k, self.E = N, k, 1 << k
        self.p01, self.p11 = instance.p01, instance.p11
        self.eps = instance.sensing.epsilon
        self.beta = instance.beta
        self.F = instance.reward
        self.actions = np.array(enumerate_actions(N, k), dtype=int)
        self.M = len(self.actions)
        # code[a, e, i]: 0 passive, 1 sensed+ACK, 2 sensed+NACK
        code = np.zeros((self.M, self.E, N), dtype=np.int8)
        for a, act in enumerate(self.actions):
            for e in range(self.E):
                for j, ch in enumerate(act):
                    code[a, e, ch] = 1 if e >> j & 1 else 2
        self.code = code
        weights = 1 << np.arange(N)
        self.index_of_mask = np.full(1 << N, -1, dtype=np.int64)
        self.index_of_mask[(weights[self.actions]).sum(axis=1)] = np.arange(self.M)
        self.weights = weights

    def action_index(self, acts: np.ndarray) -> np.ndarray:
        return self.index_of_mask[self.weights[acts].sum(axis=-1)]

    def _transition(self, B):
        passive = B * self.p11 + (1.0 - B) * self.p01
        num = self.eps * B
        den = num + 1.0 - B
        post = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 1.0)
        nack = post * self.p11 + (1.0 - post) * self.p01
        return passive, nack, (1.0 - self.eps) * B

    def expand_all(self, B):
        """Children, outcome probabilities and rewards for every action.

        Returns F ``(n, M)``, P ``(n, M, E)``, children ``(n*M*E, N)``.
        """
        passive, nack, q = self._transition(B)
        code = self.code[None]
        kids = np.where(code == 1, self.p11,
                        np.where(code == 2, nack[:, None, None, :], passive[:, None, None, :]))
        qq = q[:, None, None, :]
        fac = np.where(code == 1, qq, np.where(code == 2, 1.0 - qq, 1.0))
        P = fac.prod(axis=-1)
        F = np.asarray(self.F(B[:, self.actions]), dtype=float)
        return F, P, kids.reshape(-1, self.N)

    def expand_chosen(self, B, a_idx):
        """Same for one chosen action per node: F ``(n,)``, P ``(n, E)``, children ``(n*E, N)``."""
        passive, nack, q = self._transition(B)
        code = self.code[a_idx]  # (n, E, N)
        kids = np.where(code == 1, self.p11,
                        np.where(code == 2, nack[:, None, :], passive[:, None, :]))
        qq = q[:, None, :]
        fac = np.where(code == 1, qq, np.where(code == 2, 1.0 - qq, 1.0))
        P = fac.prod(axis=-1)
        rows = np.arange(B.shape[0])[:, None]
        F = np.asarray(self.F(B[rows, self.actions[a_idx]]), dtype=float)
        return F, P, kids.reshape(-1, self.N)

    def leaf_max(self, B):
        out = np.empty(B.shape[0])
        for s in range(0, B.shape[0], LEAF_CHUNK):
            chunk = B[s:s + LEAF_CHUNK]
            out[s:s + LEAF_CHUNK] = np.asarray(self.F(chunk[:, self.actions]), dtype=float).max(axis=1)
        return out


@dataclass
class ValueReport:
    value: float
    first_actions: list[tuple[int, ...]]
    node_count: int
    q_values: dict = field(default_factory=dict, repr=False)
    # filled when check_myopic=True: nodes where the myopic action is not among the maximisers
    myopic_violations: Optional[int] = None
    worst_myopic_margin: Optional[float] = None
    nodes_checked: Optional[int] = None


def _check_cap(instance, horizon, cap):
    cap = node_cap() if cap is None else cap
    est = estimated_nodes(instance, horizon)
    if est > cap:
        raise NodeCapExceeded(
            f"tree size (C({instance.N},{instance.k})*2^{instance.k})^{horizon} = {est} exceeds cap {cap:g}", est)


def optimal_value(instance: Instance, belief=None, horizon: int | None = None,
                  cap: float | None = None, check_myopic: bool = False) -> ValueReport:
    """Backward induction for ``V*`` over the full tree.

    All first actions within ``1e-12`` (relative) of the maximum are
    returned. With ``check_myopic`` every node of the tree is also checked
    for the myopic action being one of its maximisers.
    """
    T = instance.T if horizon is None else horizon
    _check_cap(instance, T, cap)
    tree = _Tree(instance)
    B = (instance.belief0 if belief is None else np.asarray(belief, dtype=float))[None, :]
    levels = []
    for _ in range(T - 1):
        F, P, kids = tree.expand_all(B)
        levels.append((B, F, P))
        B = kids
    V = tree.leaf_max(B)
    violations, worst, checked = 0, math.inf, 0
    if check_myopic:
        checked += B.shape[0]  # at the last slot myopic maximises F by construction; verified elsewhere
        worst = _leaf_myopic_margin(tree, B, V)
        violations += int(worst < -_tol(V))
    Q = None
    for B, F, P in reversed(levels):
        Q = F + instance.beta * (P * V.reshape(B.shape[0], tree.M, tree.E)).sum(axis=-1)
        V = Q.max(axis=1)
        if check_myopic:
            my = tree.action_index(myopic_actions(B, tree.p01, tree.p11, tree.k))
            margin = Q[np.arange(B.shape[0]), my] - V
            tol = TIE_TOL * np.maximum(1.0, np.abs(V))
            violations += int(np.count_nonzero(margin < -tol))
            worst = min(worst, float(margin.min()))
            checked += B.shape[0]
    if Q is None:
        Q = np.asarray(tree.F(B[:, tree.actions]), dtype=float)
    Q0 = Q[0]
    best = float(Q0.max())
    tol = TIE_TOL * max(1.0, abs(best))
    firsts = [tuple(int(c) for c in tree.actions[a]) for a in np.nonzero(Q0 >= best - tol)[0]]
    q_values = {tuple(int(c) for c in tree.actions[a]): float(Q0[a]) for a in range(tree.M)}
    return ValueReport(best, firsts, tree_node_count(instance, T), q_values,
                       violations if check_myopic else None,
                       worst if check_myopic else None,
                       checked if check_myopic else None)


def _tol(V):
    return TIE_TOL * max(1.0, float(np.abs(V).max()))


def _leaf_myopic_margin(tree, B, V):
    worst = math.inf
    for s in range(0, B.shape[0], LEAF_CHUNK):
        chunk = B[s:s + LEAF_CHUNK]
        my = myopic_actions(chunk, tree.p01, tree.p11, tree.k)
        rows = np.arange(chunk.shape[0])[:, None]
        fm = np.asarray(tree.F(chunk[rows, my]), dtype=float)
        worst = min(worst, float((fm - V[s:s + LEAF_CHUNK]).min()))
    return worst


def _follow(instance: Instance, belief, policy, horizon: int, first_slot: int = 0,
            first_action=None) -> float:
    """Exact expected discounted reward of a deterministic policy from ``belief``."""
    tree = _Tree(instance)
    B = np.asarray(belief, dtype=float)[None, :]
    hist = np.zeros(1, dtype=np.int64)
    levels = []
    for r in range(horizon):
        slot = first_slot + r
        if r == 0 and first_action is not None:
            acts = np.array([sorted(first_action)], dtype=int)
        else:
            acts = np.asarray(policy.decide(slot, B, hist), dtype=int)
        if acts.shape != (B.shape[0], tree.k):
            raise ValueError(f"policy returned actions of shape {acts.shape} at slot {slot}")
        a_idx = tree.action_index(acts)
        if np.any(a_idx < 0):
            raise ValueError(f"policy returned an invalid action set at slot {slot}")
        F, P, kids = tree.expand_chosen(B, a_idx)
        levels.append((F, P))
        B = kids
        hist = (hist[:, None] * tree.E + np.arange(tree.E)).reshape(-1)
    V = np.zeros(B.shape[0])
    for F, P in reversed(levels):
        V = F + instance.beta * (P * V.reshape(F.shape[0], tree.E)).sum(axis=-1)
    return float(V[0])


def policy_value(instance: Instance, policy, belief=None) -> float:
    """Exact value of a deterministic policy (myopic, fixed or tree) over slots 1..T."""
    b = instance.belief0 if belief is None else belief
    return _follow(instance, b, policy, instance.T)


def myopic_value(instance: Instance, belief=None, t: int = 1) -> float:
    b = instance.belief0 if belief is None else belief
    return _follow(instance, b, MyopicPolicy(instance.channels, instance.k),
                   instance.T - t + 1, first_slot=t - 1)


def pseudo_value(instance: Instance, t: int, belief, action) -> float:
    """``W_t``: sense ``action`` in slot ``t``, then follow the myopic policy to ``T``."""
    if not 1 <= t <= instance.T:
        raise ValueError(f"slot t={t} outside 1..{instance.T}")
    action = tuple(sorted(int(i) for i in action))
    if len(action) != instance.k or len(set(action)) != instance.k:
        raise ValueError(f"action {action} is not a set of k={instance.k} channels")
    return _follow(instance, belief, MyopicPolicy(instance.channels, instance.k),
                   instance.T - t + 1, first_slot=t - 1, first_action=action)


class VerificationFailure(AssertionError):
    """A numerical check of a structural property failed; ``context`` holds every input."""

    def __init__(self, message, context):
        super().__init__(message)
        self.context = context


@dataclass
class BoundReport:
    name: str
    case: str
    value: float
    lower: float
    upper: float
    margin: float
    holds: bool
    context: dict = field(default_factory=dict, repr=False)

    def require(self):
        if not self.holds:
            raise VerificationFailure(f"{self.name} violated ({self.case}): value={self.value!r} "
                                      f"not in [{self.lower!r}, {self.upper!r}]", self.context)
        return self


def _instance_context(instance: Instance) -> dict:
    return {
        "channels": [[c.p01, c.p11] for c in instance.channels],
        "epsilon": instance.sensing.epsilon, "delta": instance.sensing.delta,
        "k": instance.k, "T": instance.T, "beta": instance.beta,
        "reward": {"kind": instance.reward.kind, "a": instance.reward.param},
    }


def lemma4_bound_check(instance: Instance, t: int, l: int, omega_l: float, omega_l_prime: float,
                       belief=None, slack: float = 1e-10) -> BoundReport:
    """Bounds on ``W_t(Omega') - W_t(Omega)`` when only channel ``l``'s belief is raised.

    Both sides follow the myopic policy from slot ``t``. The case is
    decided by membership of ``l`` in the two myopic sets; ``l`` dropping
    out of the set when its belief rises is reported as a violation.
    """
    from .conditions import compute_quantities, discounted_gap_sum

    if not 0.0 <= omega_l <= omega_l_prime <= 1.0:
        raise ValueError(f"need 0 <= omega_l <= omega_l' <= 1, got {omega_l}, {omega_l_prime}")
    base = np.array(instance.belief0 if belief is None else belief, dtype=float)
    lo_b, hi_b = base.copy(), base.copy()
    lo_b[l], hi_b[l] = omega_l, omega_l_prime
    A = myopic_actions(lo_b[None], instance.p01, instance.p11, instance.k)[0]
    A2 = myopic_actions(hi_b[None], instance.p01, instance.p11, instance.k)[0]
    in_A, in_A2 = l in A, l in A2
    diff = myopic_value(instance, hi_b, t) - myopic_value(instance, lo_b, t)

    q = compute_quantities(instance)
    scale = q.c * (omega_l_prime - omega_l)
    s0 = discounted_gap_sum(instance.beta, q.delta_p_max, 0, instance.T - t)
    s1 = s0 - 1.0
    if in_A2 and in_A:
        case, lower, upper = "l in A' and A", scale * q.g_prime_min * q.delta_min, scale * q.g_prime_max * q.delta_max * s0
    elif not in_A2 and not in_A:
        case, lower, upper = "l outside A' and A", 0.0, scale * q.g_prime_max * q.delta_max * s1
    elif in_A2:
        case, lower, upper = "l in A' only", 0.0, scale * q.g_prime_max * q.delta_max * s0
    else:
        case, lower, upper = "l in A only (impossible)", math.nan, math.nan
    margin = -math.inf if math.isnan(lower) else min(diff - lower, upper - diff)
    ctx = _instance_context(instance) | {
        "t": t, "l": l, "omega_l": omega_l, "omega_l_prime": omega_l_prime,
        "belief": base.tolist(), "A": A.tolist(), "A_prime": A2.tolist(),
    }
    return BoundReport("lemma4", case, diff, lower, upper, margin, margin >= -slack, ctx)


def lemma5_check(instance: Instance, t: int, belief, l: int, m: int, rest=None,
                 slack: float = 1e-10) -> BoundReport:
    """``W_t(Omega_{A_l}) >= W_t(Omega_{A_m})`` for sets that differ by swapping ``m`` for ``l``.

    ``rest`` holds the other ``k-1`` channels of both sets; by default the
    highest-belief channels other than ``l`` and ``m``.
    """
    from .conditions import satisfies_theorem1

    b = np.asarray(belief, dtype=float)
    if not b[l] > b[m]:
        raise ValueError(f"the swap check needs omega_l > omega_m, got {b[l]} <= {b[m]}")
    if rest is None:
        others = [i for i in np.argsort(-b, kind="stable") if i not in (l, m)]
        rest = others[: instance.k - 1]
    rest = [int(i) for i in rest]
    if len(rest) != instance.k - 1 or {l, m} & set(rest):
        raise ValueError(f"rest={rest} must be k-1 channels distinct from l and m")
    w_l = pseudo_value(instance, t, b, rest + [l])
    w_m = pseudo_value(instance, t, b, rest + [m])
    diff = w_l - w_m
    ctx = _instance_context(instance) | {"t": t, "belief": b.tolist(), "l": l, "m": m,
                                         "rest": rest, "premise": satisfies_theorem1(instance)}
    return BoundReport("lemma5", "premise" if ctx["premise"] else "premise not met",
                       diff, 0.0, math.inf, diff, diff >= -slack, ctx)


def symmetry_check(instance: Instance, t: int, belief, action, i: int, j: int,
                   tol: float = 1e-12) -> BoundReport:
    """``W_t`` is unchanged when channels ``i`` and ``j`` swap beliefs and models.

    ``i`` and ``j`` must both be in ``action`` or both outside it.
    """
    action = tuple(sorted(action))
    if (i in action) != (j in action):
        raise ValueError(f"channels {i} and {j} must be on the same side of action {action}")
    b = np.asarray(belief, dtype=float)
    perm = list(range(instance.N))
    perm[i], perm[j] = j, i
    swapped = instance.with_(channels=tuple(instance.channels[p] for p in perm))
    w0 = pseudo_value(instance, t, b, action)
    w1 = pseudo_value(swapped, t, b[perm], action)
    diff = abs(w1 - w0)
    ctx = _instance_context(instance) | {"t": t, "belief": b.tolist(), "action": list(action), "i": i, "j": j}
    return BoundReport("symmetry", "inside" if i in action else "outside", diff, 0.0, tol,
                       tol - diff, diff <= tol, ctx)
