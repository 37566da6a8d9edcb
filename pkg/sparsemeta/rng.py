"""
Seeded random streams.

Every random draw in a run comes from a generator derived from the master seed
and a path of integer keys, so results depend only on (config, seed) and never on
evaluation frequency, thread scheduling or the order tasks are processed in.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

# Purpose tags, first element of every stream path
INIT = 0
SPLIT = 1
TRAIN = 2
EVAL = 3


@dataclass(frozen=True)
class SeedStream:
    master_seed: int
    path: Tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError(f"master seed must be an unsigned 64-bit integer, got {self.master_seed}")

    def child(self, *keys: int) -> "SeedStream":
        return SeedStream(self.master_seed, self.path + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=self.master_seed, spawn_key=self.path)
        )
