"""
Fully-connected networks and the numerical core every other module builds on.

A Network is an immutable value: forward/backward/sgd_step never mutate their
arguments, they return new arrays. Parameters are float64 numpy arrays, one
2-D weight [out, in] and one 1-D bias [out] per Linear layer.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple
import hashlib
import logging

import numpy as np

from sparsemeta.exceptions import DimensionError, NumericError
from sparsemeta.models.losses import LossKind, loss_and_grad

logger = logging.getLogger(__name__)


class LayerKind(str, Enum):
    LINEAR = "linear"
    RELU = "relu"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    in_dim: int = 0
    out_dim: int = 0
    bias: bool = True

    def __post_init__(self):
        if self.kind == LayerKind.LINEAR and (self.in_dim < 1 or self.out_dim < 1):
            raise DimensionError(f"linear layer needs positive dims, got {self.in_dim}->{self.out_dim}")

    @classmethod
    def linear(cls, in_dim: int, out_dim: int, bias: bool = True) -> "LayerSpec":
        return cls(LayerKind.LINEAR, int(in_dim), int(out_dim), bias)

    @classmethod
    def relu(cls) -> "LayerSpec":
        return cls(LayerKind.RELU)


def mlp_specs(input_dim: int, hidden_sizes: Sequence[int], output_dim: int) -> List[LayerSpec]:
    """Linear/ReLU stack: input -> hidden... -> output, no activation on the output."""
    dims = [input_dim, *hidden_sizes, output_dim]
    specs: List[LayerSpec] = []
    for i in range(len(dims) - 1):
        specs.append(LayerSpec.linear(dims[i], dims[i + 1]))
        if i < len(dims) - 2:
            specs.append(LayerSpec.relu())
    return specs


def _check_finite(arrays: Sequence[np.ndarray], what: str) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericError(f"{what} contains NaN or Inf")


@dataclass(frozen=True)
class Network:
    specs: Tuple[LayerSpec, ...]
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        object.__setattr__(self, "weights", tuple(np.asarray(w, dtype=np.float64) for w in self.weights))
        object.__setattr__(self, "biases", tuple(np.asarray(b, dtype=np.float64) for b in self.biases))

        linear = self.linear_specs
        if not linear:
            raise DimensionError("network needs at least one linear layer")
        if len(self.weights) != len(linear) or len(self.biases) != len(linear):
            raise DimensionError(
                f"{len(linear)} linear layers but {len(self.weights)} weights / {len(self.biases)} biases"
            )
        for prev, nxt in zip(linear, linear[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionError(f"layer dims do not chain: {prev.out_dim} -> {nxt.in_dim}")
        for i, (spec, w, b) in enumerate(zip(linear, self.weights, self.biases)):
            if w.shape != (spec.out_dim, spec.in_dim):
                raise DimensionError(f"weight {i} has shape {w.shape}, expected {(spec.out_dim, spec.in_dim)}")
            if b.shape != (spec.out_dim,):
                raise DimensionError(f"bias {i} has shape {b.shape}, expected {(spec.out_dim,)}")

    @property
    def linear_specs(self) -> List[LayerSpec]:
        return [s for s in self.specs if s.kind == LayerKind.LINEAR]

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    @property
    def num_parameters(self) -> int:
        """Total trainable parameter count p (bias-free layers contribute weights only)."""
        return sum(
            w.size + (b.size if spec.bias else 0)
            for spec, w, b in zip(self.linear_specs, self.weights, self.biases)
        )

    @property
    def input_dim(self) -> int:
        return self.linear_specs[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.linear_specs[-1].out_dim

    def tensors(self) -> Tuple[np.ndarray, ...]:
        """All parameter tensors interleaved as (w0, b0, w1, b1, ...)."""
        out: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return tuple(out)

    def tensor_names(self) -> List[str]:
        names: List[str] = []
        for i in range(self.num_layers):
            names.extend((f"layer{i}.weight", f"layer{i}.bias"))
        return names

    def trainable_flags(self) -> List[bool]:
        """Per tensor, whether it is a trainable parameter (fixed-zero biases are not)."""
        flags: List[bool] = []
        for spec in self.linear_specs:
            flags.extend((True, spec.bias))
        return flags

    def with_tensors(self, tensors: Sequence[np.ndarray]) -> "Network":
        tensors = list(tensors)
        if len(tensors) != 2 * self.num_layers:
            raise DimensionError(f"expected {2 * self.num_layers} tensors, got {len(tensors)}")
        return Network(self.specs, tuple(tensors[0::2]), tuple(tensors[1::2]))

    @classmethod
    def from_tensors(cls, specs: Sequence[LayerSpec], tensors: Sequence[np.ndarray]) -> "Network":
        tensors = list(tensors)
        return cls(tuple(specs), tuple(tensors[0::2]), tuple(tensors[1::2]))

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for t in self.tensors():
            digest.update(np.ascontiguousarray(t, dtype="<f8").tobytes())
        return digest.hexdigest()

    def equals(self, other: "Network") -> bool:
        """Bitwise equality of specs and every parameter."""
        return self.specs == other.specs and all(
            a.shape == b.shape and np.array_equal(a, b) for a, b in zip(self.tensors(), other.tensors())
        )


@dataclass(frozen=True)
class GradientSet:
    d_weights: Tuple[np.ndarray, ...]
    d_biases: Tuple[np.ndarray, ...]

    def tensors(self) -> Tuple[np.ndarray, ...]:
        out: List[np.ndarray] = []
        for w, b in zip(self.d_weights, self.d_biases):
            out.extend((w, b))
        return tuple(out)

    @classmethod
    def from_tensors(cls, tensors: Sequence[np.ndarray]) -> "GradientSet":
        tensors = list(tensors)
        return cls(tuple(tensors[0::2]), tuple(tensors[1::2]))


def init_network(specs: Sequence[LayerSpec], rng: np.random.Generator) -> Network:
    """Uniform fan-based init in +-sqrt(6/(in+out)) per Linear weight, zero biases."""
    weights, biases = [], []
    for spec in specs:
        if spec.kind != LayerKind.LINEAR:
            continue
        limit = np.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        weights.append(rng.uniform(-limit, limit, size=(spec.out_dim, spec.in_dim)))
        biases.append(np.zeros(spec.out_dim))
    return Network(tuple(specs), tuple(weights), tuple(biases))


def _check_inputs(net: Network, inputs) -> np.ndarray:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise DimensionError(f"inputs of shape {x.shape} do not match network input dim {net.input_dim}")
    _check_finite([x], "inputs")
    return x


def _forward_trace(net: Network, x: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Run the network and keep every layer's input for the reverse pass."""
    trace: List[np.ndarray] = []
    layer = 0
    for spec in net.specs:
        trace.append(x)
        if spec.kind == LayerKind.LINEAR:
            x = x @ net.weights[layer].T + net.biases[layer]
            layer += 1
        else:
            x = np.maximum(x, 0.0)
    _check_finite([x], "network output")
    return x, trace


def forward(net: Network, inputs) -> np.ndarray:
    return _forward_trace(net, _check_inputs(net, inputs))[0]


def backward(net: Network, inputs, targets, kind: LossKind) -> Tuple[float, GradientSet]:
    """Mean loss and exact reverse-mode gradients for every weight and bias."""
    x = _check_inputs(net, inputs)
    outputs, trace = _forward_trace(net, x)
    value, grad = loss_and_grad(kind, outputs, targets)

    d_weights: List[np.ndarray] = [None] * net.num_layers
    d_biases: List[np.ndarray] = [None] * net.num_layers
    layer = net.num_layers
    for spec, layer_input in zip(reversed(net.specs), reversed(trace)):
        if spec.kind == LayerKind.LINEAR:
            layer -= 1
            d_weights[layer] = grad.T @ layer_input
            d_biases[layer] = grad.sum(axis=0) if spec.bias else np.zeros(spec.out_dim)
            grad = grad @ net.weights[layer]
        else:
            grad = grad * (layer_input > 0.0)

    grads = GradientSet(tuple(d_weights), tuple(d_biases))
    _check_finite(grads.tensors(), "gradient")
    return value, grads


def evaluate_loss(net: Network, inputs, targets, kind: LossKind) -> float:
    outputs = forward(net, inputs)
    return loss_and_grad(kind, outputs, targets)[0]


def finite_diff_grad(net: Network, inputs, targets, kind: LossKind, step: float = 1e-6) -> GradientSet:
    """Central-difference gradient estimate, one parameter at a time."""
    if not step > 0:
        raise ValueError(f"finite-difference step must be positive, got {step}")
    base = [t.copy() for t in net.tensors()]
    estimates: List[np.ndarray] = []
    for index, (tensor, trainable) in enumerate(zip(base, net.trainable_flags())):
        estimate = np.zeros_like(tensor)
        if trainable:
            for pos in range(tensor.size):
                plus = [t.copy() for t in base]
                minus = [t.copy() for t in base]
                plus[index].flat[pos] += step
                minus[index].flat[pos] -= step
                up = evaluate_loss(net.with_tensors(plus), inputs, targets, kind)
                down = evaluate_loss(net.with_tensors(minus), inputs, targets, kind)
                estimate.flat[pos] = (up - down) / (2.0 * step)
        estimates.append(estimate)
    return GradientSet.from_tensors(estimates)


def _check_congruent(net: Network, tensors: Sequence[np.ndarray], what: str) -> None:
    params = net.tensors()
    if len(tensors) != len(params):
        raise DimensionError(f"{what} has {len(tensors)} tensors, network has {len(params)}")
    for i, (p, t) in enumerate(zip(params, tensors)):
        if np.shape(t) != p.shape:
            raise DimensionError(f"{what} tensor {i} has shape {np.shape(t)}, expected {p.shape}")


def sgd_step(
    net: Network,
    grads: GradientSet,
    lr: float,
    mask: Optional[Sequence[np.ndarray]] = None,
) -> Network:
    """
    param - lr * grad for every tensor.

    With a mask (one 0/1 array per tensor, in tensors() order) the update is
    multiplied by the mask before it is applied, so masked-out coordinates keep
    their value exactly.
    """
    if not lr > 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    grad_tensors = grads.tensors()
    _check_congruent(net, grad_tensors, "gradient")
    if mask is None:
        updated = [p - lr * g for p, g in zip(net.tensors(), grad_tensors)]
    else:
        _check_congruent(net, mask, "mask")
        updated = [p - (lr * g) * m for p, g, m in zip(net.tensors(), grad_tensors, mask)]
    _check_finite(updated, "updated parameters")
    return net.with_tensors(updated)
