"""
Layer-wise magnitude pruning and the pre-train / prune / retrain driver.

Within a pruning phase every update (inner SGD steps and the outer Reptile
move) is multiplied by the mask before it is applied, so pruned coordinates
stay exactly zero and ||theta_l||_0 <= k_l holds after every step. Retraining
drops the mask and lets the pruned weights grow back from zero.
"""

from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Tuple
import logging
import math

import numpy as np

from sparsemeta.exceptions import DimensionError, InvariantError
from sparsemeta.models.network import Network
from sparsemeta.models.sparsity import SparsityMask, SparsityPlan
from sparsemeta.rng import SeedStream
from sparsemeta.schemas.experiment import MetaConfig, OuterDecay, PhaseBlock, PruneSchedule
from sparsemeta.schemas.metrics import MetricsRecord, Phase
from sparsemeta.services.reptile_service import lr_schedule, reptile_round
from sparsemeta.services.task_service import TaskSource

logger = logging.getLogger(__name__)


def budgets_from_rate(net: Network, rate: float, prune_biases: bool = False) -> SparsityPlan:
    """k_l = p_l - floor(rate * p_l) for every prunable tensor, k_l = p_l otherwise."""
    if not 0 <= rate < 1:
        raise ValueError(f"pruning rate must lie in [0, 1), got {rate}")
    budgets, sizes, prunable = [], [], []
    for i, (tensor, trainable) in enumerate(zip(net.tensors(), net.trainable_flags())):
        is_bias = i % 2 == 1
        can_prune = trainable and (prune_biases or not is_bias)
        size = tensor.size
        budgets.append(size - math.floor(round(rate * size, 9)) if can_prune else size)
        sizes.append(size)
        prunable.append(can_prune)
    return SparsityPlan(
        rate=rate,
        budgets=tuple(budgets),
        sizes=tuple(sizes),
        prunable=tuple(prunable),
        prune_biases=prune_biases,
    )


def _check_plan(net: Network, plan: SparsityPlan) -> None:
    sizes = tuple(t.size for t in net.tensors())
    if sizes != plan.sizes:
        raise DimensionError(f"sparsity plan sizes {plan.sizes} do not match network tensors {sizes}")


def topk_mask(net: Network, plan: SparsityPlan) -> SparsityMask:
    """Ones at the k_l largest-magnitude entries of each tensor; ties go to the lower flat index."""
    _check_plan(net, plan)
    masks = []
    for tensor, keep in zip(net.tensors(), plan.budgets):
        if keep >= tensor.size:
            masks.append(np.ones_like(tensor))
            continue
        order = np.argsort(-np.abs(tensor).ravel(), kind="stable")
        flat = np.zeros(tensor.size)
        flat[order[:keep]] = 1.0
        masks.append(flat.reshape(tensor.shape))
    return SparsityMask(tuple(masks))


def _check_mask(net: Network, mask: SparsityMask) -> None:
    tensors = net.tensors()
    if len(mask.tensors) != len(tensors) or any(m.shape != t.shape for m, t in zip(mask.tensors, tensors)):
        raise DimensionError("mask is not congruent with the network")


def apply_mask(net: Network, mask: SparsityMask) -> Network:
    _check_mask(net, mask)
    return net.with_tensors([t * m for t, m in zip(net.tensors(), mask.tensors)])


def off_mask_nonzeros(net: Network, mask: SparsityMask) -> int:
    _check_mask(net, mask)
    return sum(int(np.count_nonzero(t[m == 0])) for t, m in zip(net.tensors(), mask.tensors))


def satisfies_budgets(net: Network, plan: SparsityPlan) -> bool:
    """||theta_l||_0 <= k_l for every prunable tensor."""
    _check_plan(net, plan)
    return all(
        np.count_nonzero(t) <= k
        for t, k, prunable in zip(net.tensors(), plan.budgets, plan.prunable)
        if prunable
    )


def masked_reptile_round(
    net: Network,
    mask: SparsityMask,
    source: TaskSource,
    cfg: MetaConfig,
    iteration: int,
    seeds: SeedStream,
    workers: Optional[int] = None,
    beta: Optional[float] = None,
) -> Network:
    """reptile_round restricted to the subnetwork selected by mask."""
    stray = off_mask_nonzeros(net, mask)
    if stray:
        raise InvariantError(f"{stray} parameters outside the mask are non-zero; apply the mask first")
    return reptile_round(net, source, cfg, iteration, seeds, mask=mask.tensors, workers=workers, beta=beta)


@dataclass(frozen=True)
class TensorSparsity:
    name: str
    size: int
    nonzeros: int
    prunable: bool

    @property
    def zero_fraction(self) -> float:
        return 1.0 - self.nonzeros / self.size


@dataclass(frozen=True)
class SparsityReport:
    tensors: Tuple[TensorSparsity, ...]

    @property
    def global_zero_fraction(self) -> float:
        """Share of exactly-zero entries across prunable tensors."""
        prunable = [t for t in self.tensors if t.prunable]
        size = sum(t.size for t in prunable)
        if size == 0:
            return 0.0
        return 1.0 - sum(t.nonzeros for t in prunable) / size


def sparsity_report(net: Network, prune_biases: bool = False) -> SparsityReport:
    rows = []
    for i, (name, tensor, trainable) in enumerate(zip(net.tensor_names(), net.tensors(), net.trainable_flags())):
        rows.append(
            TensorSparsity(
                name=name,
                size=tensor.size,
                nonzeros=int(np.count_nonzero(tensor)),
                prunable=trainable and (prune_biases or i % 2 == 0),
            )
        )
    return SparsityReport(tuple(rows))


@dataclass(frozen=True)
class PhaseEvent:
    phase: Phase
    round: int
    start_iter: int
    end_iter: int


@dataclass
class ScheduleHistory:
    events: List[PhaseEvent] = field(default_factory=list)
    mask_recomputations: int = 0
    mask_kept_counts: List[Tuple[int, ...]] = field(default_factory=list)
    metrics: List[MetricsRecord] = field(default_factory=list)
    # mask in force when the run stopped (None in dense phases)
    active_mask: Optional[SparsityMask] = None
    completed_iters: int = 0

    def phase_sequence(self) -> List[Phase]:
        return [e.phase for e in self.events]


IterationHook = Callable[[int, Phase, Network], Iterable[MetricsRecord]]


def outer_step_size(sched: PruneSchedule, block: PhaseBlock, beta0: float, iteration: int) -> float:
    """Outer step at a global iteration inside block."""
    if sched.outer_decay == OuterDecay.RUN:
        return lr_schedule(beta0, iteration, sched.total_iters)
    return lr_schedule(beta0, iteration - block.start_iter, block.length)


def run_schedule(
    net0: Network,
    sched: PruneSchedule,
    plan: SparsityPlan,
    source: TaskSource,
    cfg: MetaConfig,
    seeds: SeedStream,
    *,
    start_iter: int = 0,
    stop_iter: Optional[int] = None,
    initial_mask: Optional[SparsityMask] = None,
    on_iteration: Optional[IterationHook] = None,
    workers: Optional[int] = None,
) -> Tuple[Network, ScheduleHistory]:
    """
    Pre-train densely, then for each round: mask the top-k_l weights of the
    current parameters, fine-tune the subnetwork, retrain densely.

    Iterations are numbered globally across phases and key the task streams.
    The outer step starts from cfg.outer_lr in every phase block and decays
    linearly to the block end (OuterDecay.RUN decays once over the whole
    schedule instead). A run resumed at start_iter (with the mask in force
    there, if inside a pruning phase) reproduces the uninterrupted run. A
    pruning phase with zero iterations is skipped entirely.
    on_iteration is called after every meta-iteration with the number of
    completed iterations; the records it returns are collected in the history.
    """
    total = sched.total_iters
    stop = total if stop_iter is None else min(stop_iter, total)
    if not 0 <= start_iter <= stop:
        raise ValueError(f"start iteration {start_iter} outside [0, {stop}]")

    net = net0
    mask = initial_mask
    history = ScheduleHistory(completed_iters=start_iter)

    for block in sched.blocks():
        begin, end = max(block.start_iter, start_iter), min(block.end_iter, stop)
        if begin >= end:
            continue

        if block.phase == Phase.PRUNE:
            if begin == block.start_iter:
                mask = topk_mask(net, plan)
                net = apply_mask(net, mask)
                history.mask_recomputations += 1
                history.mask_kept_counts.append(mask.kept_counts())
                logger.info(f"Round {block.round}: mask recomputed, kept {plan.total_kept} of {plan.total_size} entries")
            elif mask is None:
                raise InvariantError(f"resuming inside pruning round {block.round} needs the mask in force")
        else:
            mask = None

        logger.info(f"{block.phase.value} phase (round {block.round}): iterations {begin}..{end - 1}")
        history.events.append(PhaseEvent(block.phase, block.round, begin, end))

        for it in range(begin, end):
            beta = outer_step_size(sched, block, cfg.outer_lr, it)
            if mask is not None:
                net = masked_reptile_round(net, mask, source, cfg, it, seeds, workers, beta=beta)
            else:
                net = reptile_round(net, source, cfg, it, seeds, workers=workers, beta=beta)
            history.completed_iters = it + 1
            if on_iteration is not None:
                history.metrics.extend(on_iteration(it + 1, block.phase, net))

    history.active_mask = mask
    return net, history
