"""Experiment configuration documents (JSON) and randomised instance generation."""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .belief import ChannelModel, SensingModel
from .instance import Instance
from .policy import FixedPolicy, MyopicPolicy, RandomPolicy, TreePolicy
from .rewards import RegularReward, custom_reward, make_reward


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def apply_overrides(doc: dict, overrides: list[str]) -> dict:
    """Apply ``key.sub=value`` overrides; values are parsed as JSON, falling back to strings."""
    doc = copy.deepcopy(doc)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {key}: {p} is not an object")
        node[parts[-1]] = value
    return doc


def _field(doc, key, where, default=None, kind=float):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{where}{key}: required field missing")
        return default
    try:
        return kind(doc[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}{key}: expected {kind.__name__}, got {doc[key]!r}") from exc


def _expr(source: str, var: str, where: str):
    try:
        code = compile(source, where, "eval")
    except SyntaxError as exc:
        raise ConfigError(f"{where}: {exc.msg}") from exc

    def fn(x):
        return eval(code, {"__builtins__": {}, "np": np}, {var: np.asarray(x, dtype=float)})

    return fn


def parse_reward(spec, epsilon: float, where: str = "reward") -> RegularReward:
    if isinstance(spec, str):
        spec = {"kind": spec}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(f"{where}: expected a kind name or an object with 'kind'")
    kind = spec["kind"]
    try:
        if kind == "custom":
            if "F" not in spec or "g" not in spec:
                raise ConfigError(f"{where}: custom reward needs 'F' (in w) and 'g' (in x) expressions")
            return custom_reward(_expr(spec["F"], "w", f"{where}.F"), _expr(spec["g"], "x", f"{where}.g"),
                                 float(spec.get("c", 1.0)))
        return make_reward(kind, spec.get("a"), epsilon)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_instance(doc: dict, where: str = "") -> Instance:
    if "channels" not in doc:
        raise ConfigError(f"{where}channels: required field missing")
    if not isinstance(doc["channels"], list) or not doc["channels"]:
        raise ConfigError(f"{where}channels: expected a non-empty list")
    channels = []
    for i, c in enumerate(doc["channels"]):
        here = f"{where}channels[{i}]"
        try:
            if isinstance(c, dict):
                channels.append(ChannelModel(float(c["p01"]), float(c["p11"])))
            else:
                p01, p11 = c
                channels.append(ChannelModel(float(p01), float(p11)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{here}: {exc}") from exc
    eps = _field(doc, "epsilon", where, 0.0)
    delta = _field(doc, "delta", where, 0.0)
    try:
        sensing = SensingModel(eps, delta)
    except ValueError as exc:
        raise ConfigError(f"{where}epsilon/delta: {exc}") from exc
    reward = parse_reward(doc.get("reward", "linear"), eps, f"{where}reward")
    ib = doc.get("initial_belief", "stationary")
    try:
        return Instance(tuple(channels), sensing, _field(doc, "k", where, 1, int),
                        _field(doc, "T", where, 1, int), _field(doc, "beta", where, 1.0),
                        reward, ib if isinstance(ib, str) else tuple(ib), str(doc.get("name", "")))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where.rstrip('.') or 'instance'}: {exc}") from exc


def instance_docs(doc: dict) -> list[dict]:
    """Top-level instance, or each entry of ``instances`` merged over the top-level fields."""
    if "instances" not in doc:
        return [doc]
    base = {k: v for k, v in doc.items() if k != "instances"}
    return [base | entry for entry in doc["instances"]]


def instance_to_doc(instance: Instance) -> dict:
    r = instance.reward
    reward = {"kind": r.kind} if r.param is None else {"kind": r.kind, "a": r.param}
    return {
        "name": instance.name,
        "channels": [[c.p01, c.p11] for c in instance.channels],
        "epsilon": instance.sensing.epsilon, "delta": instance.sensing.delta,
        "k": instance.k, "T": instance.T, "beta": instance.beta,
        "reward": reward,
        "initial_belief": instance.initial_belief if isinstance(instance.initial_belief, str)
        else list(instance.initial_belief),
    }


def parse_policy(spec, instance: Instance):
    if spec is None or spec == "myopic":
        return MyopicPolicy(instance.channels, instance.k)
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind")
    if kind == "myopic":
        return MyopicPolicy(instance.channels, instance.k)
    if kind == "random":
        return RandomPolicy(instance.k, int(spec.get("seed", 0)))
    if kind == "fixed":
        if "tree_file" in spec:
            with open(spec["tree_file"]) as fh:
                tree = TreePolicy.from_json(fh.read())
            if (tree.n_channels, tree.k) != (instance.N, instance.k) or tree.horizon < instance.T:
                raise ConfigError("policy.tree_file: tree does not match the instance's N, k and T")
            return tree
        if "action" in spec:
            return FixedPolicy(spec["action"])
        raise ConfigError("policy: fixed policy needs 'tree_file' or 'action'")
    raise ConfigError(f"policy: unknown kind {kind!r}; expected myopic, random or fixed")


@dataclass
class InstanceGenerator:
    """Random desk-scale instances.

    ``belief`` chooses the start: ``interval`` draws each entry uniformly in
    ``[min p01, max p11]`` (the range every belief enters after one slot),
    ``uniform`` in ``[0, 1]``, ``stationary`` uses the stationary law.
    """

    N: tuple[int, ...] = (2, 3, 4)
    k: tuple[int, ...] = (1, 2)
    T: tuple[int, ...] = (2, 3, 4, 5)
    beta: tuple[float, float] = (0.0, 1.0)
    epsilon: tuple[float, float] = (0.0, 0.3)
    delta: tuple[float, float] = (0.0, 0.3)
    delta_p_max: float = 1.0
    min_gap: float = 1e-3
    identical: bool = False
    belief: str = "interval"
    min_extra_channels: int = 0
    rewards: tuple[str, ...] = ("linear",)
    reward_params: dict = field(default_factory=dict)

    @classmethod
    def from_doc(cls, doc: Optional[dict]) -> "InstanceGenerator":
        doc = dict(doc or {})
        kw: dict[str, Any] = {}
        for key in ("N", "k", "T", "rewards"):
            if key in doc:
                v = doc.pop(key)
                kw[key] = tuple(v) if isinstance(v, list) else (v,)
        for key in ("beta", "epsilon", "delta"):
            if key in doc:
                v = doc.pop(key)
                kw[key] = (float(v[0]), float(v[1])) if isinstance(v, list) else (float(v), float(v))
        for key in ("delta_p_max", "min_gap"):
            if key in doc:
                kw[key] = float(doc.pop(key))
        for key in ("identical",):
            if key in doc:
                kw[key] = bool(doc.pop(key))
        if "belief" in doc:
            kw["belief"] = str(doc.pop("belief"))
        if "min_extra_channels" in doc:
            kw["min_extra_channels"] = int(doc.pop("min_extra_channels"))
        if "reward_params" in doc:
            kw["reward_params"] = dict(doc.pop("reward_params"))
        if doc:
            raise ConfigError(f"generator: unknown fields {sorted(doc)}")
        return cls(**kw)

    def _channel(self, rng):
        while True:
            p01, p11 = np.sort(rng.random(2))
            if self.min_gap < p11 - p01 <= self.delta_p_max:
                return ChannelModel(float(p01), float(p11))

    def sample(self, rng: np.random.Generator, reward: Optional[str] = None, name: str = "") -> Instance:
        while True:
            N = int(rng.choice(self.N))
            k = int(rng.choice(self.k))
            if k + self.min_extra_channels <= N:
                break
        T = int(rng.choice(self.T))
        beta = float(rng.uniform(*self.beta))
        eps = float(rng.uniform(*self.epsilon))
        delta = float(rng.uniform(*self.delta))
        if self.identical:
            channels = (self._channel(rng),) * N
        else:
            channels = tuple(self._channel(rng) for _ in range(N))
        lo = min(c.p01 for c in channels)
        hi = max(c.p11 for c in channels)
        if self.belief == "interval":
            b0 = tuple(float(x) for x in rng.uniform(lo, hi, size=N))
        elif self.belief == "uniform":
            b0 = tuple(float(x) for x in rng.random(N))
        elif self.belief == "stationary":
            b0 = "stationary"
        else:
            raise ConfigError(f"generator.belief: unknown mode {self.belief!r}")
        kind = reward or str(rng.choice(self.rewards))
        r = make_reward(kind, self.reward_params.get(kind), eps)
        return Instance(channels, SensingModel(eps, delta), k, T, beta, r, b0, name)


def trial_rng(seed: int, suite: str, trial: int) -> np.random.Generator:
    """Independent stream per (seed, suite, trial) so suites replay in isolation."""
    tag = sum(ord(ch) << (8 * i) for i, ch in enumerate(suite[:8]))
    return np.random.default_rng([seed, tag, trial])
