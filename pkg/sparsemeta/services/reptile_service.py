"""
Reptile: first-order meta-learning by moving the initialization toward the mean
of task-adapted parameters.

Meta-training reads support sets only; query sets are for evaluation.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, Optional, Sequence, TypeVar
import logging

import numpy as np

from sparsemeta import rng as streams
from sparsemeta.config import settings
from sparsemeta.exceptions import DimensionError
from sparsemeta.models.episode import TaskEpisode
from sparsemeta.models.network import Network, backward, sgd_step
from sparsemeta.rng import SeedStream
from sparsemeta.schemas.experiment import MetaConfig
from sparsemeta.services.task_service import TaskSource, sample_episode

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# one adapted Network per task of a meta-batch, in task-index order
AdaptedParams = Sequence[Network]


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: Optional[int] = None) -> List[R]:
    """Map in input order, on a thread pool when more than one worker is configured."""
    workers = settings.workers if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def lr_schedule(beta0: float, iteration: int, total: int) -> float:
    """Outer step size decaying linearly from beta0 toward 0 over total iterations."""
    if total <= 0:
        raise ValueError(f"total meta-iterations must be positive, got {total}")
    if not 0 <= iteration < total:
        raise ValueError(f"iteration {iteration} outside [0, {total})")
    return beta0 * (1.0 - iteration / total)


def minibatch_indices(size: int, batch: int, steps: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    """
    Index batches for the inner loop.

    Without replacement within a pass over the support set, reshuffled once the
    pass cannot fill another batch. A batch at least as large as the support set
    means full-batch steps and draws nothing from rng.
    """
    if batch >= size:
        for _ in range(steps):
            yield np.arange(size)
        return
    order = rng.permutation(size)
    pos = 0
    for _ in range(steps):
        if pos + batch > size:
            order = rng.permutation(size)
            pos = 0
        yield order[pos:pos + batch]
        pos += batch


def inner_adapt(
    net: Network,
    episode: TaskEpisode,
    cfg: MetaConfig,
    rng: np.random.Generator,
    *,
    lr: Optional[float] = None,
    iterations: Optional[int] = None,
    batch: Optional[int] = None,
    mask: Optional[Sequence[np.ndarray]] = None,
) -> Network:
    """SGD on the support set; lr/iterations/batch default to the inner-loop settings of cfg."""
    lr = cfg.inner_lr if lr is None else lr
    iterations = cfg.inner_iterations if iterations is None else iterations
    batch = cfg.inner_batch if batch is None else batch

    x, y = episode.support_x, episode.support_y
    for idx in minibatch_indices(episode.support_size, batch, iterations, rng):
        _, grads = backward(net, x[idx], y[idx], cfg.loss)
        net = sgd_step(net, grads, lr, mask)
    return net


def outer_update(
    net: Network,
    adapted: AdaptedParams,
    beta: float,
    mask: Optional[Sequence[np.ndarray]] = None,
) -> Network:
    """phi + beta * (mean(adapted) - phi); the mean sums tasks in index order."""
    if not adapted:
        raise ValueError("outer update needs at least one adapted network")
    if beta < 0:
        raise ValueError(f"outer step size must be non-negative, got {beta}")
    base = net.tensors()
    for a in adapted:
        if a.specs != net.specs or any(t.shape != p.shape for t, p in zip(a.tensors(), base)):
            raise DimensionError("adapted network is not congruent with the meta network")

    count = len(adapted)
    updated = []
    for i, phi in enumerate(base):
        total = adapted[0].tensors()[i].copy()
        for a in adapted[1:]:
            total = total + a.tensors()[i]
        step = beta * (total / count - phi)
        updated.append(phi + step if mask is None else phi + step * mask[i])
    return net.with_tensors(updated)


def adapt_task(
    net: Network,
    source: TaskSource,
    cfg: MetaConfig,
    stream: SeedStream,
    mask: Optional[Sequence[np.ndarray]] = None,
) -> Network:
    """Sample one episode and adapt to it; both draws come from the same task stream."""
    gen = stream.generator()
    episode = sample_episode(source, cfg.n_way, cfg.k_shot, cfg.q_query, gen)
    return inner_adapt(net, episode, cfg, gen, mask=mask)


def task_streams(seeds: SeedStream, iteration: int, count: int) -> List[SeedStream]:
    return [seeds.child(streams.TRAIN, iteration, i) for i in range(count)]


def reptile_round(
    net: Network,
    source: TaskSource,
    cfg: MetaConfig,
    iteration: int,
    seeds: SeedStream,
    mask: Optional[Sequence[np.ndarray]] = None,
    workers: Optional[int] = None,
    beta: Optional[float] = None,
) -> Network:
    """
    One meta-iteration.

    All meta_batch tasks adapt from the same snapshot of net; task i draws from
    the stream (TRAIN, iteration, i) of the master seed, so the result does not
    depend on the order or the thread tasks run on. beta overrides the outer
    step size, which otherwise decays linearly over cfg.total_meta_iterations.
    """
    adapted = ordered_map(
        lambda stream: adapt_task(net, source, cfg, stream, mask),
        task_streams(seeds, iteration, cfg.meta_batch),
        workers,
    )
    if beta is None:
        beta = lr_schedule(cfg.outer_lr, iteration, cfg.total_meta_iterations)
    logger.debug(f"meta-iteration {iteration}: beta={beta:.6f}")
    return outer_update(net, adapted, beta, mask)
