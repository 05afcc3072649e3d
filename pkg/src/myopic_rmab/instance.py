from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .belief import ChannelModel, SensingModel, stationary_belief
from .rewards import RegularReward, make_reward


@dataclass(frozen=True)
class Instance:
    """One experiment: channels, sensing errors, k, horizon, discount, reward, start belief.

    ``initial_belief`` is either a per-channel sequence or the string
    ``"stationary"``.
    """

    channels: tuple[ChannelModel, ...]
    sensing: SensingModel
    k: int
    T: int
    beta: float
    reward: RegularReward
    initial_belief: Union[tuple[float, ...], str] = "stationary"
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ValueError("an instance needs at least one channel")
        if not 1 <= self.k <= self.N:
            raise ValueError(f"need 1 <= k <= N, got k={self.k}, N={self.N}")
        if int(self.T) != self.T or self.T < 1:
            raise ValueError(f"horizon T must be a positive integer, got {self.T}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        if isinstance(self.initial_belief, str):
            if self.initial_belief != "stationary":
                raise ValueError(f"initial_belief must be a vector or 'stationary', got {self.initial_belief!r}")
        else:
            b = tuple(float(x) for x in self.initial_belief)
            if len(b) != self.N:
                raise ValueError(f"initial_belief has {len(b)} entries for {self.N} channels")
            if not all(0.0 <= x <= 1.0 for x in b):
                raise ValueError(f"initial_belief entries must lie in [0, 1], got {b}")
            object.__setattr__(self, "initial_belief", b)

    @classmethod
    def create(cls, channels: Sequence, epsilon=0.0, delta=0.0, k=1, T=1, beta=1.0,
               reward: Union[str, RegularReward] = "linear", reward_param=None,
               initial_belief="stationary", name="") -> "Instance":
        chans = tuple(c if isinstance(c, ChannelModel) else ChannelModel(*c) for c in channels)
        if isinstance(reward, str):
            reward = make_reward(reward, reward_param, epsilon)
        return cls(chans, SensingModel(epsilon, delta), int(k), int(T), float(beta), reward,
                   initial_belief, name)

    @property
    def N(self) -> int:
        return len(self.channels)

    @property
    def p01(self) -> np.ndarray:
        return np.array([c.p01 for c in self.channels])

    @property
    def p11(self) -> np.ndarray:
        return np.array([c.p11 for c in self.channels])

    @property
    def belief0(self) -> np.ndarray:
        if isinstance(self.initial_belief, str):
            return np.array([stationary_belief(c) for c in self.channels])
        return np.array(self.initial_belief)

    @property
    def identical_channels(self) -> bool:
        return len(set(self.channels)) == 1

    def with_(self, **changes) -> "Instance":
        return replace(self, **changes)
