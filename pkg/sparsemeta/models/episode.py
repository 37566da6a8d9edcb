from dataclasses import dataclass
from enum import Enum

import numpy as np


class Split(str, Enum):
    META_TRAIN = "train"
    META_TEST = "test"

    @property
    def code(self) -> int:
        return 0 if self is Split.META_TRAIN else 1


@dataclass(frozen=True)
class TaskEpisode:
    """
    One few-shot task.

    Classification: support_y / query_y are int64 labels in 0..N-1, grouped by
    episode class (K support and Q query rows per class). Regression: the y arrays
    are float targets of shape [rows, 1].
    """

    support_x: np.ndarray
    support_y: np.ndarray
    query_x: np.ndarray
    query_y: np.ndarray
    n_way: int
    regression: bool = False

    @property
    def support_size(self) -> int:
        return self.support_x.shape[0]
