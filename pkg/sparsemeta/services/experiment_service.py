"""
End-to-end experiment runs: config file -> sources and network -> scheduled
sparse Reptile with periodic evaluation -> metrics CSV and checkpoint.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union
import logging

from dotenv.parser import parse_stream
from pydantic import ValidationError

from sparsemeta import rng as streams
from sparsemeta.config import settings
from sparsemeta.exceptions import ConfigError, DimensionError
from sparsemeta.models.episode import Split
from sparsemeta.models.network import Network, init_network, mlp_specs
from sparsemeta.rng import SeedStream
from sparsemeta.schemas.experiment import ExperimentConfig, PruneSchedule, SourceKind
from sparsemeta.schemas.metrics import MetricsRecord, Phase
from sparsemeta.services.checkpoint_service import Checkpoint, save_checkpoint
from sparsemeta.services.evaluation_service import evaluate
from sparsemeta.services.metrics_service import MetricsWriter
from sparsemeta.services.pruning_service import ScheduleHistory, budgets_from_rate, run_schedule, sparsity_report
from sparsemeta.services.task_service import (
    BlobsParams,
    TaskSource,
    make_blobs_source,
    make_imagedir_source,
    make_sinusoid_source,
    split_source,
)

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
FINAL_CHECKPOINT = "final.ckpt"
PRETRAIN_CHECKPOINT = "pretrain.ckpt"
EVAL_FILE = "eval.csv"


def _config_error(e: ValidationError) -> ConfigError:
    first = e.errors()[0]
    key = ".".join(str(part) for part in first["loc"]) or None
    return ConfigError(first["msg"], key)


def read_config_values(path: Path) -> Dict[str, str]:
    """Raw key -> value strings of a flat key = value file, comments skipped."""
    values: Dict[str, str] = {}
    with open(path, encoding="utf-8") as stream:
        for binding in parse_stream(stream):
            line = binding.original.line
            if binding.error:
                raise ConfigError(f"line {line}: cannot parse {binding.original.string.strip()!r}")
            if binding.key is None:
                continue
            if binding.value is None:
                raise ConfigError(f"line {line}: missing '= value'", binding.key)
            if binding.key in values:
                raise ConfigError(f"line {line}: duplicate key", binding.key)
            values[binding.key] = binding.value
    return values


def load_experiment_config(path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    Parse a flat key = value file and validate it.

    Overrides (command-line --seed / --out) win over file values; None values
    in overrides are ignored. A relative image_dir is resolved against the
    config file's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")

    values: Dict[str, Any] = dict(read_config_values(path))
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = value

    image_dir = values.get("image_dir")
    if image_dir and not Path(image_dir).is_absolute():
        values["image_dir"] = str(path.parent / image_dir)

    try:
        cfg = ExperimentConfig(**values)
    except ValidationError as e:
        raise _config_error(e) from e
    logger.info(f"Loaded experiment config {path} (seed {cfg.master_seed}, schedule {cfg.schedule.value})")
    return cfg


def build_sources(cfg: ExperimentConfig) -> Tuple[TaskSource, TaskSource]:
    """Meta-train and meta-test sources; class partitions come from the SPLIT stream."""
    gen = SeedStream(cfg.master_seed).child(streams.SPLIT).generator()
    if cfg.source == SourceKind.SINUSOID:
        return make_sinusoid_source()
    if cfg.source == SourceKind.IMAGEDIR:
        full = make_imagedir_source(cfg.image_dir, min_images=cfg.k_shot + cfg.q_query)
        return split_source(full, cfg.meta_split_fraction, gen)
    params = BlobsParams.draw(cfg.num_classes, cfg.input_dim, gen, cfg.noise_sigma)
    return make_blobs_source(params, cfg.meta_split_fraction, gen)


def build_network(cfg: ExperimentConfig, input_dim: int) -> Network:
    output_dim = 1 if cfg.is_regression else cfg.n_way
    specs = mlp_specs(input_dim, cfg.hidden_sizes, output_dim)
    return init_network(specs, SeedStream(cfg.master_seed).child(streams.INIT).generator())


def phase_at(sched: PruneSchedule, completed_iters: int) -> Phase:
    """Phase of the last completed iteration (pretrain before any)."""
    phase = Phase.PRETRAIN
    for block in sched.blocks():
        if block.length and block.start_iter < completed_iters:
            phase = block.phase
    return phase


@dataclass
class RunResult:
    network: Network
    history: ScheduleHistory
    metrics_path: Path
    checkpoint_path: Path

    @property
    def metrics(self) -> List[MetricsRecord]:
        return self.history.metrics


ProgressCallback = Callable[[int, int], None]


def run_experiment(
    cfg: ExperimentConfig,
    *,
    init: Optional[Checkpoint] = None,
    stop_after_pretrain: bool = False,
    workers: Optional[int] = None,
    on_progress: Optional[ProgressCallback] = None,
) -> RunResult:
    """
    Run the configured schedule, evaluating both meta-splits every eval_every
    iterations and after the last one.

    With init the run continues from the checkpoint's iteration, mask and
    parameters. stop_after_pretrain ends the run at the end of the pretraining
    phase and writes pretrain.ckpt instead of final.ckpt.
    """
    seeds = SeedStream(cfg.master_seed)
    sched = cfg.prune_schedule()
    meta = cfg.meta_config()
    train_source, test_source = build_sources(cfg)
    if train_source.num_classes < meta.n_way and not cfg.is_regression:
        raise ConfigError(
            f"{meta.n_way}-way episodes need more meta-train classes than {train_source.num_classes}", "n_way"
        )

    net = build_network(cfg, train_source.input_dim)
    start_iter, mask = 0, None
    if init is not None:
        if tuple(init.specs) != tuple(net.specs):
            raise DimensionError("checkpoint architecture does not match the configured network")
        if init.master_seed != cfg.master_seed:
            logger.warning(f"Checkpoint seed {init.master_seed} differs from config seed {cfg.master_seed}")
        net, start_iter, mask = init.network(), init.meta_iter, init.mask

    stop_iter = sched.pretrain_iters if stop_after_pretrain else sched.total_iters
    if start_iter > stop_iter:
        raise ConfigError(f"checkpoint is at iteration {start_iter}, past the end of this run ({stop_iter})")
    plan = budgets_from_rate(net, cfg.resolved_rate, cfg.prune_biases)

    out_dir = Path(cfg.output_dir or settings.default_output_dir)
    metrics_path = out_dir / METRICS_FILE
    logger.info(
        f"Running {cfg.schedule.value} schedule: iterations {start_iter}..{stop_iter} of {sched.total_iters}, "
        f"rate {cfg.resolved_rate}, {net.num_parameters} parameters"
    )

    with MetricsWriter(metrics_path) as writer:

        def on_iteration(completed: int, phase: Phase, current: Network) -> List[MetricsRecord]:
            if on_progress is not None:
                on_progress(completed, stop_iter)
            if completed % cfg.eval_every and completed != stop_iter:
                return []
            rate = sparsity_report(current, cfg.prune_biases).global_zero_fraction
            records = [
                evaluate(current, source, cfg, seeds, completed, phase, rate, workers)
                for source in (train_source, test_source)
            ]
            writer.write_all(records)
            return records

        net, history = run_schedule(
            net,
            sched,
            plan,
            train_source,
            meta,
            seeds,
            start_iter=start_iter,
            stop_iter=stop_iter,
            initial_mask=mask,
            on_iteration=on_iteration,
            workers=workers,
        )

    checkpoint_path = save_checkpoint(
        out_dir / (PRETRAIN_CHECKPOINT if stop_after_pretrain else FINAL_CHECKPOINT),
        Checkpoint.from_network(net, cfg.master_seed, history.completed_iters, history.active_mask),
    )
    return RunResult(net, history, metrics_path, checkpoint_path)


def evaluate_checkpoint(
    cfg: ExperimentConfig,
    ckpt: Checkpoint,
    split: Split = Split.META_TEST,
    workers: Optional[int] = None,
) -> MetricsRecord:
    train_source, test_source = build_sources(cfg)
    net = ckpt.network()
    if net.input_dim != train_source.input_dim:
        raise DimensionError(f"checkpoint expects {net.input_dim} inputs, source provides {train_source.input_dim}")
    source = train_source if split == Split.META_TRAIN else test_source
    rate = sparsity_report(net, cfg.prune_biases).global_zero_fraction
    phase = phase_at(cfg.prune_schedule(), ckpt.meta_iter)
    return evaluate(net, source, cfg, SeedStream(cfg.master_seed), ckpt.meta_iter, phase, rate, workers)
