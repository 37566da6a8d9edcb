"""
Loss functions over network outputs.

Each loss returns the batch-mean value together with its gradient with respect
to the outputs, which is all backward() needs to start the reverse pass.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from sparsemeta.exceptions import DimensionError, NumericError


class LossName(str, Enum):
    CROSS_ENTROPY = "cross_entropy"
    MSE = "mse"
    MARGIN_RAMP = "margin_ramp"


@dataclass(frozen=True)
class LossKind:
    name: LossName
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.name == LossName.MARGIN_RAMP:
            if self.gamma is None or not self.gamma > 0:
                raise ValueError(f"margin ramp loss needs gamma > 0, got {self.gamma}")

    @classmethod
    def cross_entropy(cls) -> "LossKind":
        return cls(LossName.CROSS_ENTROPY)

    @classmethod
    def mse(cls) -> "LossKind":
        return cls(LossName.MSE)

    @classmethod
    def margin_ramp(cls, gamma: float) -> "LossKind":
        return cls(LossName.MARGIN_RAMP, gamma)

    @property
    def uses_labels(self) -> bool:
        return self.name != LossName.MSE


def _as_labels(outputs: np.ndarray, targets) -> np.ndarray:
    labels = np.asarray(targets)
    if labels.ndim != 1 or labels.shape[0] != outputs.shape[0]:
        raise DimensionError(
            f"expected {outputs.shape[0]} class labels, got array of shape {labels.shape}"
        )
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise ValueError("class labels must be integers")
        labels = labels.astype(np.int64)
    num_classes = outputs.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"class label out of range [0, {num_classes})")
    return labels


def margins(outputs: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Multiclass margin M(v, y) = max_{j != y} v_j - v_y for every row.

    Returns the margins and the runner-up column j* (lowest index among ties).
    Negative margin means the row is classified correctly with room to spare.
    """
    if outputs.shape[1] < 2:
        raise DimensionError("margin needs at least two output columns")
    rows = np.arange(outputs.shape[0])
    others = outputs.copy()
    others[rows, labels] = -np.inf
    runner_up = np.argmax(others, axis=1)
    return others[rows, runner_up] - outputs[rows, labels], runner_up


def ramp(m: np.ndarray, gamma: float) -> np.ndarray:
    """h_gamma: 0 for m <= -gamma, 1 + m/gamma in between, 1 for m >= 0."""
    return np.where(m <= -gamma, 0.0, np.where(m >= 0, 1.0, 1.0 + m / gamma))


def zero_one_loss(outputs: np.ndarray, targets) -> np.ndarray:
    """Per-row 1[y != argmax_j v_j] with argmax ties resolved toward the lowest index."""
    labels = _as_labels(outputs, targets)
    return (np.argmax(outputs, axis=1) != labels).astype(np.float64)


def loss_and_grad(kind: LossKind, outputs: np.ndarray, targets) -> Tuple[float, np.ndarray]:
    """Mean loss over the batch and d(loss)/d(outputs)."""
    outputs = np.asarray(outputs, dtype=np.float64)
    if outputs.ndim != 2:
        raise DimensionError(f"outputs must be 2-D (batch x classes), got shape {outputs.shape}")
    n = outputs.shape[0]
    if n == 0:
        raise DimensionError("empty batch")

    if kind.name == LossName.MSE:
        target = np.asarray(targets, dtype=np.float64)
        if target.shape != outputs.shape:
            raise DimensionError(
                f"MSE targets shape {target.shape} does not match outputs {outputs.shape}"
            )
        diff = outputs - target
        value = float(np.mean(np.sum(diff * diff, axis=1)))
        grad = 2.0 * diff / n

    elif kind.name == LossName.CROSS_ENTROPY:
        labels = _as_labels(outputs, targets)
        rows = np.arange(n)
        z = outputs - np.max(outputs, axis=1, keepdims=True)
        exp = np.exp(z)
        total = np.sum(exp, axis=1)
        value = float(np.mean(np.log(total) - z[rows, labels]))
        grad = exp / total[:, None]
        grad[rows, labels] -= 1.0
        grad /= n

    else:
        labels = _as_labels(outputs, targets)
        gamma = kind.gamma
        m, runner_up = margins(outputs, labels)
        value = float(np.mean(ramp(m, gamma)))
        # subgradient: slope 1/gamma on the open linear segment only
        slope = np.where((m > -gamma) & (m < 0), 1.0 / gamma, 0.0) / n
        rows = np.arange(n)
        grad = np.zeros_like(outputs)
        grad[rows, runner_up] += slope
        grad[rows, labels] -= slope

    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NumericError(f"{kind.name.value} loss is not finite")
    return value, grad


def loss(kind: LossKind, outputs: np.ndarray, targets) -> float:
    return loss_and_grad(kind, outputs, targets)[0]
