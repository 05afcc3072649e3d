"""Monte Carlo runs of a sensing policy.

Two fidelities share one loop:

* ``channel`` draws true Markov states, sensing outcomes (false alarm
  ``eps`` on good channels, miss detection ``delta`` on bad ones),
  transmissions, ACKs and collisions;
* ``belief`` skips the states and draws each sensed channel's ACK with
  probability ``(1-eps)*w``.

Episode ``e`` of a run seeded with ``s`` reads all its randomness from a
Philox stream keyed by ``(s, fidelity, e)``, so results do not depend on
chunking and any single episode can be replayed alone.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .instance import Instance
from .planner import _Tree

CHUNK = 20_000
_FIDELITY_TAG = {"channel": 1, "belief": 2}


@dataclass
class SimStats:
    fidelity: str
    episodes: int
    seed: int
    mean_reward: float
    std_error: float
    mean_success: float
    success_std_error: float
    collision_rate: float
    ack_zscore: float
    collision_zscore: float

    def to_dict(self):
        return asdict(self)


def episode_uniforms(seed: int, fidelity: str, episode: int, T: int, N: int) -> np.ndarray:
    """The ``(T+1, 3, N)`` uniforms episode ``episode`` consumes.

    Row ``t < T``: policy keys, sensing/ACK draws, state transitions for
    slot ``t``; row ``T``: initial states.
    """
    key = np.array([seed, (_FIDELITY_TAG[fidelity] << 48) | episode], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random((T + 1, 3, N))


def _run(instance: Instance, policy, episodes: int, seed: int, fidelity: str,
         log_episodes: int = 0):
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    if fidelity not in _FIDELITY_TAG:
        raise ValueError(f"unknown fidelity {fidelity!r}")
    tree = _Tree(instance)
    N, k, T, E = instance.N, instance.k, instance.T, tree.E
    eps, delta, beta = instance.sensing.epsilon, instance.sensing.delta, instance.beta
    p01, p11 = instance.p01, instance.p11

    reward = np.empty(episodes)
    success = np.empty(episodes)
    ack_dev = ack_var = coll_dev = coll_var = 0.0
    n_sensed = n_coll = 0
    logs: list[dict] = []

    for start in range(0, episodes, CHUNK):
        n = min(CHUNK, episodes - start)
        U = np.stack([episode_uniforms(seed, fidelity, start + e, T, N) for e in range(n)])
        w = np.broadcast_to(instance.belief0, (n, N)).copy()
        S = (U[:, T, 0, :] < w) if fidelity == "channel" else None
        hist = np.zeros(n, dtype=np.int64)
        r_tot = np.zeros(n)
        s_tot = np.zeros(n)
        rows = np.arange(n)[:, None]
        for t in range(T):
            u_pol, u_obs, u_tr = U[:, t, 0, :], U[:, t, 1, :], U[:, t, 2, :]
            acts = np.asarray(policy.decide(t, w, hist, u_pol), dtype=int)
            sensed = np.zeros((n, N), dtype=bool)
            sensed[rows, acts] = True
            q = (1.0 - eps) * w
            if fidelity == "channel":
                s_prime = np.where(S, u_obs >= eps, u_obs < delta) & sensed
                ack = S & s_prime
                collide = s_prime & ~S
                pc = delta * (1.0 - w)
                coll_dev += float((collide.astype(float) - pc)[sensed].sum())
                coll_var += float((pc * (1.0 - pc))[sensed].sum())
                n_coll += int(collide.sum())
            else:
                ack = (u_obs < q) & sensed
                collide = np.zeros_like(ack)
            ack_dev += float((ack.astype(float) - q)[sensed].sum())
            ack_var += float((q * (1.0 - q))[sensed].sum())
            n_sensed += int(sensed.sum())

            disc = beta**t
            f = np.asarray(instance.reward(w[rows, acts]), dtype=float)
            r_tot += disc * f
            s_tot += disc * ack.sum(axis=1)

            post = np.where(eps * w + 1.0 - w > 0.0, eps * w / np.maximum(eps * w + 1.0 - w, 1e-300), 1.0)
            passive = w * p11 + (1.0 - w) * p01
            nack = post * p11 + (1.0 - post) * p01
            w_next = np.where(ack, p11, np.where(sensed, nack, passive))

            bits = (ack[rows, acts] * (1 << np.arange(k))).sum(axis=1)
            if start == 0 and log_episodes:
                for e in range(min(log_episodes, n)):
                    logs.append({
                        "episode": e, "slot": t + 1, "action": acts[e].tolist(),
                        "state": S[e].astype(int).tolist() if S is not None else None,
                        "sensed_good": s_prime[e][acts[e]].astype(int).tolist() if fidelity == "channel" else None,
                        "ack": ack[e][acts[e]].astype(int).tolist(),
                        "collision": collide[e][acts[e]].astype(int).tolist(),
                        "belief_before": w[e].tolist(), "belief_after": w_next[e].tolist(),
                        "reward": float(f[e]), "successes": int(ack[e].sum()),
                    })
            hist = hist * E + bits
            w = w_next
            if fidelity == "channel":
                S = np.where(S, u_tr < p11, u_tr < p01)
        reward[start:start + n] = r_tot
        success[start:start + n] = s_tot

    def se(x):
        return float(x.std(ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0

    def z(dev, var):
        return float(dev / np.sqrt(var)) if var > 0 else 0.0

    stats = SimStats(
        fidelity, episodes, seed,
        float(reward.mean()), se(reward), float(success.mean()), se(success),
        n_coll / n_sensed if n_sensed else 0.0,
        z(ack_dev, ack_var), z(coll_dev, coll_var),
    )
    return stats, logs


def simulate_channel_level(instance: Instance, policy, episodes: int, seed: int,
                           log_episodes: int = 0) -> SimStats:
    return _run(instance, policy, episodes, seed, "channel", log_episodes)[0]


def simulate_belief_level(instance: Instance, policy, episodes: int, seed: int,
                          log_episodes: int = 0) -> SimStats:
    return _run(instance, policy, episodes, seed, "belief", log_episodes)[0]


def simulate(instance: Instance, policy, episodes: int, seed: int, fidelity: str = "channel",
             log_episodes: int = 0) -> tuple[SimStats, list[dict]]:
    """Run one fidelity and also return per-slot records of the first ``log_episodes`` episodes."""
    return _run(instance, policy, episodes, seed, fidelity, log_episodes)


def write_jsonl(records: Iterable[dict], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def agreement_z(a: SimStats, b: Optional[SimStats] = None, exact: Optional[float] = None) -> float:
    """Two-sample (or one-sample against an exact value) z-score of mean discounted F-reward."""
    if b is not None:
        se = np.hypot(a.std_error, b.std_error)
        return float((a.mean_reward - b.mean_reward) / se) if se > 0 else 0.0
    if exact is None:
        raise TypeError("need a second run or an exact value")
    return float((a.mean_reward - exact) / a.std_error) if a.std_error > 0 else 0.0
