from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class SparsityPlan:
    """Kept-weight budget k_l for every parameter tensor, in Network.tensors() order."""

    rate: float
    budgets: Tuple[int, ...]
    sizes: Tuple[int, ...]
    prunable: Tuple[bool, ...]
    prune_biases: bool = False

    @property
    def total_kept(self) -> int:
        """k = sum of k_l over every tensor."""
        return sum(self.budgets)

    @property
    def total_size(self) -> int:
        return sum(self.sizes)


@dataclass(frozen=True)
class SparsityMask:
    """One 0/1 float64 array per parameter tensor, congruent with the network."""

    tensors: Tuple[np.ndarray, ...]

    def kept_counts(self) -> Tuple[int, ...]:
        return tuple(int(np.count_nonzero(m)) for m in self.tensors)

    def is_all_ones(self) -> bool:
        return all(bool(np.all(m == 1.0)) for m in self.tensors)
