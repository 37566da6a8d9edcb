"""
Test configuration and fixtures
"""

import pytest
import numpy as np
from pathlib import Path
from typing import Callable, Dict, List, Sequence
from faker import Faker

from sparsemeta.models.losses import LossKind
from sparsemeta.models.network import LayerSpec, Network, init_network, mlp_specs
from sparsemeta.rng import SeedStream
from sparsemeta.schemas.experiment import MetaConfig
from sparsemeta.services.task_service import BlobsParams, make_blobs_source


@pytest.fixture
def rng() -> np.random.Generator:
    """Fresh generator with a fixed seed."""
    return np.random.default_rng(20240611)


@pytest.fixture
def seeds() -> SeedStream:
    return SeedStream(1234)


@pytest.fixture
def tiny_net(rng) -> Network:
    """4 -> 6 -> 3 MLP with non-zero biases."""
    net = init_network(mlp_specs(4, [6], 3), rng)
    return net.with_tensors(
        [t if i % 2 == 0 else rng.normal(scale=0.1, size=t.shape) for i, t in enumerate(net.tensors())]
    )


@pytest.fixture
def scalar_net() -> Callable[[float], Network]:
    """f(x) = w * x, a single bias-free weight."""

    def build(w: float) -> Network:
        return Network((LayerSpec.linear(1, 1, bias=False),), (np.array([[w]]),), (np.zeros(1),))

    return build


@pytest.fixture
def blobs_sources():
    """8 well separated classes in 4 dims, split 4 / 4."""
    gen = np.random.default_rng(7)
    params = BlobsParams.draw(8, 4, gen, noise_sigma=0.5)
    return make_blobs_source(params, 0.5, gen)


@pytest.fixture
def meta_cfg() -> MetaConfig:
    return MetaConfig(
        inner_lr=0.05,
        outer_lr=1.0,
        meta_batch=3,
        inner_iterations=3,
        inner_batch=4,
        n_way=3,
        k_shot=2,
        q_query=3,
        loss=LossKind.cross_entropy(),
        total_meta_iterations=20,
    )


@pytest.fixture
def meta_net(rng) -> Network:
    """Network matching blobs_sources and meta_cfg: 4 inputs, 3-way outputs."""
    return init_network(mlp_specs(4, [8], 3), rng)


@pytest.fixture
def experiment_values(tmp_path) -> Dict[str, object]:
    """A small, fast blobs experiment."""
    return {
        "master_seed": 42,
        "schedule": "custom",
        "pretrain_iters": 4,
        "prune_iters": 3,
        "retrain_iters": 3,
        "rounds": 1,
        "rate": 0.5,
        "inner_lr": 0.05,
        "meta_batch": 2,
        "inner_iterations": 2,
        "inner_batch": 4,
        "n_way": 3,
        "k_shot": 1,
        "q_query": 2,
        "hidden_sizes": "8",
        "num_classes": 8,
        "input_dim": 4,
        "noise_sigma": 0.5,
        "meta_split_fraction": 0.5,
        "eval_tasks": 4,
        "eval_inner_iterations": 2,
        "eval_inner_batch": 3,
        "eval_every": 5,
        "output_dir": str(tmp_path / "runs"),
    }


@pytest.fixture
def write_config(tmp_path) -> Callable[..., Path]:
    """Write a flat key = value config file."""

    def write(values: Dict[str, object], name: str = "experiment.cfg", header: str = "") -> Path:
        path = tmp_path / name
        lines = [header] if header else []
        lines += [f"{key} = {value}" for key, value in values.items()]
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    return write


def pgm_bytes(width: int, height: int, pixels: Sequence[int], maxval: int = 255, comment: str = "") -> bytes:
    header = "P5\n" + (f"# {comment}\n" if comment else "") + f"{width} {height}\n{maxval}\n"
    return header.encode("ascii") + bytes(pixels)


@pytest.fixture
def pgm_corpus(tmp_path) -> Callable[..., Path]:
    """Build a directory of class folders holding 2x2 PGM images; class names come from Faker."""
    fake = Faker()
    Faker.seed(0)

    def build(images_per_class: List[List[Sequence[int]]], width: int = 2, height: int = 2) -> Path:
        root = tmp_path / "corpus"
        names = sorted({fake.unique.word() for _ in range(len(images_per_class) * 3)})[: len(images_per_class)]
        for name, images in zip(names, images_per_class):
            class_dir = root / name
            class_dir.mkdir(parents=True)
            for i, pixels in enumerate(images):
                (class_dir / f"img{i:03d}.pgm").write_bytes(pgm_bytes(width, height, pixels))
        return root

    return build
