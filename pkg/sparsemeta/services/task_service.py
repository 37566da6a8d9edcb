"""
Episodic task sources.

A source is an immutable description of a task distribution restricted to one
meta-split; all randomness comes from the generator the caller passes in, so
episodes are a pure function of (source, N, K, Q, generator state).
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Union
import logging
import math

import numpy as np

from sparsemeta.exceptions import TaskSourceError
from sparsemeta.models.episode import Split, TaskEpisode

logger = logging.getLogger(__name__)


class TaskSource(ABC):
    kind: str
    split: Split
    classes: Tuple[int, ...]

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    @abstractmethod
    def input_dim(self) -> int:
        ...

    @property
    def regression(self) -> bool:
        return False

    @abstractmethod
    def restricted(self, classes: Tuple[int, ...], split: Split) -> "TaskSource":
        """Same generative parameters, limited to a subset of classes."""

    @abstractmethod
    def sample(self, n_way: int, k_shot: int, q_query: int, rng: np.random.Generator) -> TaskEpisode:
        """One N-way episode with k_shot support and q_query query rows per class."""


class ClassificationSource(TaskSource):
    """Episodes built from per-class feature rows; subclasses only draw the rows."""

    @abstractmethod
    def _draw(self, chosen: np.ndarray, count: int, rng: np.random.Generator) -> List[np.ndarray]:
        """count feature rows for each chosen class index, in order."""

    def sample(self, n_way: int, k_shot: int, q_query: int, rng: np.random.Generator) -> TaskEpisode:
        if n_way > self.num_classes:
            raise TaskSourceError(
                f"{n_way}-way episodes need at least {n_way} classes, {self.split.value} split has {self.num_classes}"
            )
        picks = rng.choice(self.num_classes, size=n_way, replace=False)
        chosen = np.asarray(self.classes)[picks]
        rows = self._draw(chosen, k_shot + q_query, rng)

        support_x = np.concatenate([r[:k_shot] for r in rows])
        query_x = np.concatenate([r[k_shot:] for r in rows])
        labels = np.arange(n_way, dtype=np.int64)
        return TaskEpisode(
            support_x=support_x,
            support_y=np.repeat(labels, k_shot),
            query_x=query_x,
            query_y=np.repeat(labels, q_query),
            n_way=n_way,
        )


@dataclass(frozen=True, eq=False)
class BlobsParams:
    """Gaussian clusters: one fixed center per class, isotropic noise."""

    centers: np.ndarray
    noise_sigma: float = 1.0

    def __post_init__(self):
        if not self.noise_sigma > 0:
            raise ValueError(f"noise_sigma must be positive, got {self.noise_sigma}")
        if self.centers.ndim != 2 or self.centers.shape[0] < 1:
            raise ValueError(f"centers must be a non-empty C x d array, got {self.centers.shape}")

    @classmethod
    def draw(cls, num_classes: int, input_dim: int, rng: np.random.Generator, noise_sigma: float = 1.0) -> "BlobsParams":
        return cls(rng.uniform(-5.0, 5.0, size=(num_classes, input_dim)), noise_sigma)

    @property
    def num_classes(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True, eq=False)
class BlobsSource(ClassificationSource):
    params: BlobsParams
    classes: Tuple[int, ...]
    split: Split = Split.META_TRAIN
    kind: str = field(default="blobs", init=False)

    @property
    def input_dim(self) -> int:
        return self.params.centers.shape[1]

    def restricted(self, classes, split):
        return BlobsSource(self.params, tuple(classes), split)

    def _draw(self, chosen, count, rng):
        sigma = self.params.noise_sigma
        return [self.params.centers[c] + sigma * rng.standard_normal((count, self.input_dim)) for c in chosen]


@dataclass(frozen=True, eq=False)
class SinusoidSource(TaskSource):
    """Regression tasks y = A sin(x + phase), one (A, phase) per episode."""

    amplitude_range: Tuple[float, float] = (0.1, 5.0)
    phase_range: Tuple[float, float] = (0.0, math.pi)
    x_range: Tuple[float, float] = (-5.0, 5.0)
    split: Split = Split.META_TRAIN
    classes: Tuple[int, ...] = (0,)
    kind: str = field(default="sinusoid", init=False)

    @property
    def input_dim(self) -> int:
        return 1

    @property
    def regression(self) -> bool:
        return True

    def restricted(self, classes, split):
        return SinusoidSource(self.amplitude_range, self.phase_range, self.x_range, split)

    def sample(self, n_way: int, k_shot: int, q_query: int, rng: np.random.Generator) -> TaskEpisode:
        amplitude = rng.uniform(*self.amplitude_range)
        phase = rng.uniform(*self.phase_range)
        x = rng.uniform(*self.x_range, size=(k_shot + q_query, 1))
        y = amplitude * np.sin(x + phase)
        return TaskEpisode(
            support_x=x[:k_shot],
            support_y=y[:k_shot],
            query_x=x[k_shot:],
            query_y=y[k_shot:],
            n_way=1,
            regression=True,
        )


@dataclass(frozen=True, eq=False)
class ImageDirSource(ClassificationSource):
    """Grayscale images, one array of flattened pixels per class directory."""

    class_names: Tuple[str, ...]
    images: Tuple[np.ndarray, ...]
    width: int
    height: int
    classes: Tuple[int, ...]
    split: Split = Split.META_TRAIN
    kind: str = field(default="imagedir", init=False)

    @property
    def input_dim(self) -> int:
        return self.width * self.height

    def restricted(self, classes, split):
        return ImageDirSource(self.class_names, self.images, self.width, self.height, tuple(classes), split)

    def _draw(self, chosen, count, rng):
        rows = []
        for c in chosen:
            available = self.images[c]
            if available.shape[0] < count:
                raise TaskSourceError(
                    f"class '{self.class_names[c]}' has {available.shape[0]} images, episode needs {count}"
                )
            rows.append(available[rng.choice(available.shape[0], size=count, replace=False)])
        return rows


def sample_episode(source: TaskSource, n_way: int, k_shot: int, q_query: int, rng: np.random.Generator) -> TaskEpisode:
    if min(n_way, k_shot, q_query) < 1:
        raise ValueError(f"N, K and Q must be >= 1, got {n_way}, {k_shot}, {q_query}")
    return source.sample(n_way, k_shot, q_query, rng)


def split_classes(num_classes: int, fraction: float, rng: np.random.Generator) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """floor(fraction * C) shuffled classes for meta-train, the rest for meta-test; both non-empty."""
    if not 0 < fraction < 1:
        raise ValueError(f"meta split fraction must lie in (0, 1), got {fraction}")
    if num_classes < 2:
        raise TaskSourceError(f"cannot split {num_classes} class(es) into two non-empty meta-splits")
    n_train = min(max(math.floor(fraction * num_classes), 1), num_classes - 1)
    order = rng.permutation(num_classes)
    return tuple(sorted(int(c) for c in order[:n_train])), tuple(sorted(int(c) for c in order[n_train:]))


def split_source(source: TaskSource, fraction: float, rng: np.random.Generator) -> Tuple[TaskSource, TaskSource]:
    train_idx, test_idx = split_classes(source.num_classes, fraction, rng)
    all_classes = np.asarray(source.classes)
    train = source.restricted(tuple(int(c) for c in all_classes[list(train_idx)]), Split.META_TRAIN)
    test = source.restricted(tuple(int(c) for c in all_classes[list(test_idx)]), Split.META_TEST)
    logger.info(f"{source.kind} source split into {train.num_classes} train / {test.num_classes} test classes")
    return train, test


def make_blobs_source(params: BlobsParams, meta_split_fraction: float, rng: np.random.Generator) -> Tuple[BlobsSource, BlobsSource]:
    full = BlobsSource(params, tuple(range(params.num_classes)))
    return split_source(full, meta_split_fraction, rng)


def make_sinusoid_source() -> Tuple[SinusoidSource, SinusoidSource]:
    """Sinusoid tasks have no classes; both meta-splits share the task distribution."""
    return SinusoidSource(split=Split.META_TRAIN), SinusoidSource(split=Split.META_TEST)


def read_pgm(path: Union[str, Path]) -> Tuple[int, int, np.ndarray]:
    """Binary PGM (P5, maxval <= 255) -> (width, height, pixels scaled to [0, 1])."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise TaskSourceError(f"cannot read image {path}: {e}") from e

    if data[:2] != b"P5":
        raise TaskSourceError(f"{path} is not a binary PGM (P5) file")

    pos = 2
    values = []
    while len(values) < 3:
        while pos < len(data) and (data[pos:pos + 1].isspace() or data[pos:pos + 1] == b"#"):
            if data[pos:pos + 1] == b"#":
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end
            pos += 1
        start = pos
        while pos < len(data) and data[pos:pos + 1].isdigit():
            pos += 1
        if start == pos:
            raise TaskSourceError(f"{path}: malformed PGM header")
        values.append(int(data[start:pos]))

    width, height, maxval = values
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise TaskSourceError(f"{path}: unsupported PGM geometry {width}x{height} maxval {maxval}")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise TaskSourceError(f"{path}: malformed PGM header")
    pos += 1

    payload = data[pos:pos + width * height]
    if len(payload) < width * height:
        raise TaskSourceError(f"{path}: pixel data truncated")
    raw = np.frombuffer(payload, dtype=np.uint8)
    if raw.max() > maxval:
        raise TaskSourceError(f"{path}: pixel value {raw.max()} exceeds maxval {maxval}")
    return width, height, raw.astype(np.float64) / maxval


def make_imagedir_source(path: Union[str, Path], min_images: int = 1) -> ImageDirSource:
    """One class per subdirectory (lexicographic order), each holding *.pgm images of one size."""
    root = Path(path)
    if not root.is_dir():
        raise TaskSourceError(f"image directory not found: {root}")

    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise TaskSourceError(f"no class directories under {root}")

    names: List[str] = []
    images: List[np.ndarray] = []
    shape = None
    for class_dir in class_dirs:
        files = sorted(f for f in class_dir.iterdir() if f.is_file() and f.suffix.lower() == ".pgm")
        if len(files) < min_images:
            raise TaskSourceError(f"class '{class_dir.name}' has {len(files)} images, need at least {min_images}")
        rows = []
        for f in files:
            width, height, pixels = read_pgm(f)
            if shape is None:
                shape = (width, height)
            elif (width, height) != shape:
                raise TaskSourceError(
                    f"{f}: image is {width}x{height}, corpus images are {shape[0]}x{shape[1]}"
                )
            rows.append(pixels)
        names.append(class_dir.name)
        images.append(np.stack(rows))

    logger.info(f"Loaded image corpus {root}: {len(names)} classes, {shape[0]}x{shape[1]} pixels")
    return ImageDirSource(
        class_names=tuple(names),
        images=tuple(images),
        width=shape[0],
        height=shape[1],
        classes=tuple(range(len(names))),
    )
