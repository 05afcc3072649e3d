"""Sensing policies.

Every policy exposes ``decide(slot, beliefs, history, uniforms=None)``
working on a batch of nodes: ``beliefs`` is ``(n, N)``, ``history`` is an
``(n,)`` integer id of the ACK-outcome history and the result is an
``(n, k)`` array of sorted channel indices. ``slot`` is 0-based.

History ids are mixed-radix: after observing outcome number ``e`` (see
``belief.enumerate_outcomes``) a node with id ``h`` moves to ``h*2**k + e``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Iterator, Sequence

import numpy as np

from .belief import ChannelModel, enumerate_actions
from .rewards import RegularReward

DEFAULT_POLICY_CAP = 10**6
TREE_FORMAT = "myopic-rmab/tree-policy/1"


class PolicyCapExceeded(RuntimeError):
    def __init__(self, message, count):
        super().__init__(message)
        self.count = count


def myopic_actions(beliefs, p01, p11, k: int) -> np.ndarray:
    """Batched myopic choice: the ``k`` largest beliefs.

    Ties go to the larger passive prediction ``tau_i(w_i)``, then to the
    lower channel index.
    """
    beliefs = np.atleast_2d(np.asarray(beliefs, dtype=float))
    n, N = beliefs.shape
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    pred = beliefs * p11 + (1.0 - beliefs) * p01
    idx = np.broadcast_to(np.arange(N), beliefs.shape)
    order = np.lexsort((idx, -pred, -beliefs), axis=-1)
    return np.sort(order[:, :k], axis=-1)


def myopic_action(belief, channels: Sequence[ChannelModel], reward: RegularReward | None = None,
                  k: int = 1) -> tuple[int, ...]:
    # reward is unused: for any g-regular F the top-k beliefs maximise it
    belief = np.asarray(belief, dtype=float)
    if k > belief.size:
        raise ValueError(f"cannot sense k={k} of {belief.size} channels")
    p01 = np.array([c.p01 for c in channels])
    p11 = np.array([c.p11 for c in channels])
    return tuple(int(i) for i in myopic_actions(belief[None], p01, p11, k)[0])


def argmax_equivalence_check(belief, channels, reward: RegularReward, k: int) -> bool:
    """Does the largest-belief set also maximise ``F`` over every ``k``-subset?"""
    belief = np.asarray(belief, dtype=float)
    sets = np.array(list(combinations(range(belief.size), k)))
    values = np.asarray(reward(belief[sets]), dtype=float)
    best = float(values.max())
    chosen = float(reward(belief[list(myopic_action(belief, channels, reward, k))]))
    return chosen >= best - 1e-12 * max(1.0, abs(best))


class MyopicPolicy:
    name = "myopic"

    def __init__(self, channels: Sequence[ChannelModel], k: int):
        self.p01 = np.array([c.p01 for c in channels])
        self.p11 = np.array([c.p11 for c in channels])
        self.k = k

    def decide(self, slot, beliefs, history, uniforms=None):
        return myopic_actions(beliefs, self.p01, self.p11, self.k)


class FixedPolicy:
    """Always senses the same set."""

    name = "fixed"

    def __init__(self, action):
        self.action = np.array(sorted(action), dtype=int)
        self.k = self.action.size

    def decide(self, slot, beliefs, history, uniforms=None):
        return np.broadcast_to(self.action, (len(beliefs), self.k)).copy()


class RandomPolicy:
    """Uniformly random set each slot, driven by the caller's per-episode uniforms.

    It has no exact value; the simulator supplies ``uniforms`` drawn from
    the episode's own stream, which keeps seeded runs reproducible.
    """

    name = "random"

    def __init__(self, k: int, seed: int = 0):
        self.k = k
        self.seed = seed

    def decide(self, slot, beliefs, history, uniforms=None):
        if uniforms is None:
            raise TypeError("the random policy has no exact value; use the simulator")
        return np.sort(np.argsort(uniforms, axis=-1)[:, : self.k], axis=-1)


@dataclass
class TreePolicy:
    """A deterministic history-dependent policy stored as a decision tree.

    ``levels[t][h]`` is the index (into ``actions``) of the set sensed in
    slot ``t`` at history id ``h``; level ``t`` has ``(2**k)**t`` entries.
    """

    n_channels: int
    k: int
    levels: list[np.ndarray]

    name = "tree"

    def __post_init__(self):
        self.actions = np.array(enumerate_actions(self.n_channels, self.k), dtype=int)
        E = 1 << self.k
        for t, lv in enumerate(self.levels):
            if len(lv) != E**t:
                raise ValueError(f"tree level {t} has {len(lv)} decisions, expected {E**t}")

    @property
    def horizon(self) -> int:
        return len(self.levels)

    def decide(self, slot, beliefs, history, uniforms=None):
        if slot >= len(self.levels):
            raise ValueError(f"tree policy has no decision for slot {slot}")
        return self.actions[np.asarray(self.levels[slot])[history]]

    def to_json(self) -> str:
        return json.dumps({
            "format": TREE_FORMAT,
            "n_channels": self.n_channels,
            "k": self.k,
            "horizon": self.horizon,
            "levels": [[self.actions[a].tolist() for a in lv] for lv in self.levels],
        })

    @classmethod
    def from_json(cls, text: str) -> "TreePolicy":
        doc = json.loads(text)
        if doc.get("format") != TREE_FORMAT:
            raise ValueError(f"not a tree-policy document (format={doc.get('format')!r})")
        lookup = {a: i for i, a in enumerate(enumerate_actions(doc["n_channels"], doc["k"]))}
        try:
            levels = [np.array([lookup[tuple(sorted(a))] for a in lv], dtype=int) for lv in doc["levels"]]
        except KeyError as exc:
            raise ValueError(f"invalid action {list(exc.args[0])} in tree policy") from exc
        return cls(doc["n_channels"], doc["k"], levels)


def tree_policy_count(n_channels: int, k: int, T: int) -> int:
    M, E = math.comb(n_channels, k), 1 << k
    return M ** sum(E**t for t in range(T))


def enumerate_tree_policies(instance, node_cap: float = 1e5,
                            policy_cap: float = DEFAULT_POLICY_CAP) -> Iterator[TreePolicy]:
    """Yield every deterministic history-dependent policy exactly once.

    Refuses when the tree size ``(C(N,k)*2**k)**T`` or the number of
    policies exceeds its cap.
    """
    N, k, T = instance.N, instance.k, instance.T
    M, E = math.comb(N, k), 1 << k
    nodes = (M * E) ** T
    if nodes > node_cap:
        raise PolicyCapExceeded(f"tree size {nodes} exceeds cap {node_cap:g}", nodes)
    count = tree_policy_count(N, k, T)
    if count > policy_cap:
        raise PolicyCapExceeded(f"{count} tree policies exceed cap {policy_cap:g}", count)
    sizes = [E**t for t in range(T)]
    for flat in product(range(M), repeat=sum(sizes)):
        levels, pos = [], 0
        for s in sizes:
            levels.append(np.array(flat[pos:pos + s], dtype=int))
            pos += s
        yield TreePolicy(N, k, levels)
