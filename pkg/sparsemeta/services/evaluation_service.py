"""
Few-shot evaluation: fine-tune a copy of the meta-parameters on each episode's
support set and score it on the query set.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from sparsemeta import rng as streams
from sparsemeta.exceptions import InvariantError
from sparsemeta.models.episode import Split
from sparsemeta.models.losses import LossKind, loss, zero_one_loss
from sparsemeta.models.network import Network, forward
from sparsemeta.rng import SeedStream
from sparsemeta.schemas.experiment import ExperimentConfig
from sparsemeta.schemas.metrics import MetricsRecord, Phase
from sparsemeta.services.reptile_service import inner_adapt, ordered_map
from sparsemeta.services.task_service import TaskSource, sample_episode

logger = logging.getLogger(__name__)

Z_95 = 1.96


def confidence_interval(values: Sequence[float]) -> Tuple[float, float]:
    """(mean, 1.96 * sample std / sqrt(n)) using the n - 1 standard deviation."""
    data = np.asarray(values, dtype=np.float64)
    if data.ndim != 1 or data.size < 2:
        raise ValueError(f"confidence interval needs at least 2 values, got {data.size}")
    return float(np.mean(data)), Z_95 * float(np.std(data, ddof=1)) / math.sqrt(data.size)


@dataclass(frozen=True)
class EpisodeScore:
    # accuracy for classification, -MSE for regression
    score: float
    loss: float


def eval_stream(seeds: SeedStream, split: Split, meta_iter: int, episode: int) -> SeedStream:
    return seeds.child(streams.EVAL, split.code, meta_iter, episode)


def score_episode(net: Network, source: TaskSource, cfg: ExperimentConfig, stream: SeedStream) -> EpisodeScore:
    gen = stream.generator()
    meta = cfg.meta_config()
    episode = sample_episode(source, meta.n_way, meta.k_shot, meta.q_query, gen)
    adapted = inner_adapt(
        net,
        episode,
        meta,
        gen,
        iterations=cfg.eval_inner_iterations,
        batch=cfg.eval_inner_batch,
    )
    outputs = forward(adapted, episode.query_x)
    if episode.regression:
        mse = loss(LossKind.mse(), outputs, episode.query_y)
        return EpisodeScore(score=-mse, loss=mse)
    accuracy = 1.0 - float(np.mean(zero_one_loss(outputs, episode.query_y)))
    return EpisodeScore(score=accuracy, loss=loss(meta.loss, outputs, episode.query_y))


def score_episodes(
    net: Network,
    source: TaskSource,
    cfg: ExperimentConfig,
    seeds: SeedStream,
    meta_iter: int,
    workers: Optional[int] = None,
) -> List[EpisodeScore]:
    return ordered_map(
        lambda i: score_episode(net, source, cfg, eval_stream(seeds, source.split, meta_iter, i)),
        list(range(cfg.eval_tasks)),
        workers,
    )


def evaluate(
    net: Network,
    source: TaskSource,
    cfg: ExperimentConfig,
    seeds: SeedStream,
    meta_iter: int,
    phase: Phase,
    current_rate: float = 0.0,
    workers: Optional[int] = None,
) -> MetricsRecord:
    """
    Mean query score over cfg.eval_tasks episodes of source's split.

    Episode i is drawn from the stream (EVAL, split, meta_iter, i), so evaluating
    never touches the training streams. net itself is left untouched.
    """
    if cfg.eval_tasks < 2:
        raise InvariantError(f"evaluation needs at least 2 episodes for a confidence interval, got {cfg.eval_tasks}")
    scores = score_episodes(net, source, cfg, seeds, meta_iter, workers)
    mean, halfwidth = confidence_interval([s.score for s in scores])
    record = MetricsRecord(
        meta_iter=meta_iter,
        phase=phase,
        split=source.split,
        accuracy=mean,
        ci_halfwidth=halfwidth,
        loss=float(np.mean([s.loss for s in scores])),
        current_rate=current_rate,
    )
    logger.info(
        f"[{meta_iter}] {phase.value} {source.split.value}: {mean:.4f} +- {halfwidth:.4f} (loss {record.loss:.4f})"
    )
    return record
