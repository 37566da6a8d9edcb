"""
Binary checkpoints.

Layout, little-endian throughout:

    b"SMLR" | u32 version
    u32 n_specs | n_specs x (u8 kind, u32 in, u32 out)
    u32 n_tensors | n_tensors x (u32 ndim, ndim x u32 dim, prod(dims) x f64)
    u8 has_mask | if set: one u8 per parameter entry, tensors in order
    u64 master_seed | u64 meta_iter

Layer kind bytes: 0 linear, 1 relu, 2 linear without bias.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union
import logging
import struct

import numpy as np

from sparsemeta.exceptions import (
    BadMagicError,
    CheckpointError,
    TruncatedCheckpointError,
    VersionMismatchError,
)
from sparsemeta.models.network import LayerKind, LayerSpec, Network
from sparsemeta.models.sparsity import SparsityMask

logger = logging.getLogger(__name__)

MAGIC = b"SMLR"
FORMAT_VERSION = 1

_KIND_LINEAR = 0
_KIND_RELU = 1
_KIND_LINEAR_NO_BIAS = 2


@dataclass(frozen=True)
class Checkpoint:
    specs: Tuple[LayerSpec, ...]
    tensors: Tuple[np.ndarray, ...]
    master_seed: int
    meta_iter: int
    mask: Optional[SparsityMask] = None
    version: int = FORMAT_VERSION

    @classmethod
    def from_network(
        cls,
        net: Network,
        master_seed: int,
        meta_iter: int,
        mask: Optional[SparsityMask] = None,
    ) -> "Checkpoint":
        return cls(net.specs, net.tensors(), master_seed, meta_iter, mask)

    def network(self) -> Network:
        return Network.from_tensors(self.specs, self.tensors)


def _spec_kind(spec: LayerSpec) -> int:
    if spec.kind == LayerKind.RELU:
        return _KIND_RELU
    return _KIND_LINEAR if spec.bias else _KIND_LINEAR_NO_BIAS


def _spec_from_kind(kind: int, in_dim: int, out_dim: int) -> LayerSpec:
    if kind == _KIND_RELU:
        return LayerSpec.relu()
    if kind in (_KIND_LINEAR, _KIND_LINEAR_NO_BIAS):
        return LayerSpec.linear(in_dim, out_dim, bias=kind == _KIND_LINEAR)
    raise CheckpointError(f"unknown layer kind byte {kind}")


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    parts: List[bytes] = [MAGIC, struct.pack("<I", ckpt.version)]

    parts.append(struct.pack("<I", len(ckpt.specs)))
    for spec in ckpt.specs:
        parts.append(struct.pack("<BII", _spec_kind(spec), spec.in_dim, spec.out_dim))

    parts.append(struct.pack("<I", len(ckpt.tensors)))
    for tensor in ckpt.tensors:
        parts.append(struct.pack(f"<I{tensor.ndim}I", tensor.ndim, *tensor.shape))
        parts.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())

    if ckpt.mask is None:
        parts.append(b"\x00")
    else:
        parts.append(b"\x01")
        for m in ckpt.mask.tensors:
            parts.append(np.ascontiguousarray(m, dtype=np.uint8).tobytes())

    parts.append(struct.pack("<QQ", ckpt.master_seed, ckpt.meta_iter))
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise TruncatedCheckpointError(f"file ends inside {what} (offset {self.pos}, need {size} bytes)")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode_checkpoint(data: bytes) -> Checkpoint:
    reader = _Reader(data)
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise BadMagicError(f"not a checkpoint: expected magic {MAGIC!r}, found {data[:len(MAGIC)]!r}")
    reader.pos = len(MAGIC)

    (version,) = reader.unpack("<I", "version")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"checkpoint format version {version}, supported {FORMAT_VERSION}")

    (n_specs,) = reader.unpack("<I", "layer spec count")
    specs = tuple(_spec_from_kind(*reader.unpack("<BII", f"layer spec {i}")) for i in range(n_specs))

    (n_tensors,) = reader.unpack("<I", "tensor count")
    tensors = []
    for i in range(n_tensors):
        (ndim,) = reader.unpack("<I", f"tensor {i} header")
        shape = reader.unpack(f"<{ndim}I", f"tensor {i} dims")
        count = int(np.prod(shape, dtype=np.int64))
        raw = reader.take(8 * count, f"tensor {i} data")
        tensors.append(np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape))

    (has_mask,) = reader.unpack("<B", "mask flag")
    if has_mask not in (0, 1):
        raise CheckpointError(f"invalid mask flag {has_mask}")
    mask = None
    if has_mask:
        masks = []
        for i, tensor in enumerate(tensors):
            raw = reader.take(tensor.size, f"mask {i}")
            masks.append(np.frombuffer(raw, dtype=np.uint8).astype(np.float64).reshape(tensor.shape))
        mask = SparsityMask(tuple(masks))

    master_seed, meta_iter = reader.unpack("<QQ", "seed and iteration")
    if reader.pos != len(data):
        raise CheckpointError(f"{len(data) - reader.pos} unexpected trailing bytes")

    return Checkpoint(specs, tuple(tensors), master_seed, meta_iter, mask, version)


def save_checkpoint(path: Union[str, Path], ckpt: Checkpoint) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(ckpt))
    logger.info(f"Checkpoint written to {path} (meta_iter {ckpt.meta_iter})")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    ckpt = decode_checkpoint(data)
    logger.debug(f"Loaded checkpoint {path}: {len(ckpt.tensors)} tensors, meta_iter {ckpt.meta_iter}")
    return ckpt
