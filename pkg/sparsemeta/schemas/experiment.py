from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing import List, Optional, Tuple
from enum import Enum

from sparsemeta.models.losses import LossKind, LossName
from sparsemeta.schemas.metrics import Phase


class MetaConfig(BaseModel):
    """Reptile hyperparameters; defaults follow the published hyperparameter tables."""

    model_config = ConfigDict(frozen=True)

    inner_lr: float = Field(0.001, gt=0)
    outer_lr: float = Field(1.0, gt=0, description="Initial outer step size, decays linearly")
    meta_batch: int = Field(5, ge=1)
    inner_iterations: int = Field(8, ge=0)
    inner_batch: int = Field(10, ge=1)
    n_way: int = Field(5, ge=1)
    k_shot: int = Field(1, ge=1)
    q_query: int = Field(15, ge=1)
    loss: LossKind = LossKind(LossName.CROSS_ENTROPY)
    total_meta_iterations: int = Field(1, ge=1)


class OuterDecay(str, Enum):
    """How the outer step size decays across a pre-train / prune / retrain schedule."""

    PHASE = "phase"  # restart from outer_lr at the start of every phase block
    RUN = "run"  # one linear decay over the whole schedule


class PhaseBlock(BaseModel):
    model_config = ConfigDict(frozen=True)

    phase: Phase
    round: int
    start_iter: int
    end_iter: int

    @property
    def length(self) -> int:
        return self.end_iter - self.start_iter


class PruneSchedule(BaseModel):
    """
    Iteration counts for pre-training and the prune/retrain rounds.

    rounds == 1 is the dense-sparse-dense schedule; rounds > 1 alternates pruning
    and retraining, recomputing the mask at the start of every round.
    outer_decay selects whether the outer step decays within each phase block or
    once over the whole run.
    """

    model_config = ConfigDict(frozen=True)

    pretrain_iters: int = Field(300, ge=0)
    prune_iters: int = Field(500, ge=0)
    retrain_iters: int = Field(200, ge=0)
    rounds: int = Field(1, ge=1)
    outer_decay: OuterDecay = OuterDecay.PHASE

    @classmethod
    def dsd(cls, pretrain_iters: int = 300, prune_iters: int = 500, retrain_iters: int = 200) -> "PruneSchedule":
        return cls(pretrain_iters=pretrain_iters, prune_iters=prune_iters, retrain_iters=retrain_iters, rounds=1)

    @classmethod
    def iht(cls, pretrain_iters: int = 300, interval_iters: int = 200, ratio: float = 0.75, rounds: int = 4) -> "PruneSchedule":
        return cls.from_interval(pretrain_iters, interval_iters, ratio, rounds)

    @classmethod
    def baseline(cls, iterations: int = 1000) -> "PruneSchedule":
        return cls(pretrain_iters=iterations, prune_iters=0, retrain_iters=0, rounds=1)

    @classmethod
    def from_interval(cls, pretrain_iters: int, interval_iters: int, ratio: float, rounds: int) -> "PruneSchedule":
        """Split each interval into round(ratio * interval) pruning and the rest retraining."""
        if not 0 < ratio < 1:
            raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
        if interval_iters < 0:
            raise ValueError(f"interval_iters must be >= 0, got {interval_iters}")
        prune_iters = int(round(ratio * interval_iters))
        return cls(
            pretrain_iters=pretrain_iters,
            prune_iters=prune_iters,
            retrain_iters=interval_iters - prune_iters,
            rounds=rounds,
        )

    @property
    def interval_iters(self) -> int:
        return self.prune_iters + self.retrain_iters

    @property
    def ratio(self) -> Optional[float]:
        if self.interval_iters == 0:
            return None
        return self.prune_iters / self.interval_iters

    @property
    def is_dsd(self) -> bool:
        return self.rounds == 1

    @property
    def total_iters(self) -> int:
        return self.pretrain_iters + self.rounds * self.interval_iters

    def blocks(self) -> List[PhaseBlock]:
        """Globally numbered phase blocks, empty blocks included."""
        blocks = [PhaseBlock(phase=Phase.PRETRAIN, round=0, start_iter=0, end_iter=self.pretrain_iters)]
        start = self.pretrain_iters
        for r in range(1, self.rounds + 1):
            blocks.append(PhaseBlock(phase=Phase.PRUNE, round=r, start_iter=start, end_iter=start + self.prune_iters))
            start += self.prune_iters
            blocks.append(PhaseBlock(phase=Phase.RETRAIN, round=r, start_iter=start, end_iter=start + self.retrain_iters))
            start += self.retrain_iters
        return blocks


class SchedulePreset(str, Enum):
    DSD = "dsd"
    IHT = "iht"
    BASELINE = "baseline"
    CUSTOM = "custom"


class SourceKind(str, Enum):
    BLOBS = "blobs"
    SINUSOID = "sinusoid"
    IMAGEDIR = "imagedir"


class MetricName(str, Enum):
    ACCURACY = "accuracy"
    MSE = "mse"


class ExperimentConfig(BaseModel):
    """
    Flat experiment configuration, one key per line in the config file.

    Unset schedule/loss/metric keys are resolved from the preset and the source
    kind after validation; unknown keys are rejected.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    master_seed: int = Field(..., ge=0, lt=2**64)

    # Schedule
    schedule: SchedulePreset = SchedulePreset.DSD
    pretrain_iters: Optional[int] = Field(None, ge=0)
    prune_iters: Optional[int] = Field(None, ge=0)
    retrain_iters: Optional[int] = Field(None, ge=0)
    rounds: Optional[int] = Field(None, ge=1)
    interval_iters: Optional[int] = Field(None, ge=0)
    ratio: Optional[float] = Field(None, gt=0, lt=1)

    # Sparsity
    rate: Optional[float] = Field(None, ge=0, lt=1)
    prune_biases: bool = False

    # Reptile
    inner_lr: float = Field(0.001, gt=0)
    outer_lr: float = Field(1.0, gt=0)
    outer_decay: OuterDecay = OuterDecay.PHASE
    meta_batch: int = Field(5, ge=1)
    inner_iterations: int = Field(8, ge=0)
    inner_batch: int = Field(10, ge=1)
    n_way: int = Field(5, ge=1)
    k_shot: int = Field(1, ge=1)
    q_query: int = Field(15, ge=1)
    loss: Optional[LossName] = None
    margin_gamma: float = Field(1.0, gt=0)
    hidden_sizes: Tuple[int, ...] = (64, 64)

    # Task source
    source: SourceKind = SourceKind.BLOBS
    num_classes: int = Field(20, ge=2)
    input_dim: int = Field(16, ge=1)
    noise_sigma: float = Field(1.0, gt=0)
    meta_split_fraction: float = Field(0.6, gt=0, lt=1)
    image_dir: Optional[str] = None
    metric: Optional[MetricName] = None

    # Evaluation
    eval_tasks: int = Field(600, ge=2)
    eval_inner_iterations: int = Field(50, ge=0)
    eval_inner_batch: int = Field(5, ge=1)
    eval_every: int = Field(50, ge=1)

    output_dir: Optional[str] = None

    @field_validator("hidden_sizes", mode="before")
    @classmethod
    def parse_hidden_sizes(cls, value):
        if isinstance(value, str):
            value = value.strip()
            if not value:
                return ()
            return tuple(int(part) for part in value.split(","))
        return value

    @field_validator("hidden_sizes")
    @classmethod
    def check_hidden_sizes(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(size < 1 for size in value):
            raise ValueError("hidden sizes must be positive")
        return value

    @model_validator(mode="after")
    def check_consistency(self) -> "ExperimentConfig":
        regression = self.source == SourceKind.SINUSOID
        if self.source == SourceKind.IMAGEDIR and not self.image_dir:
            raise ValueError("image_dir is required when source = imagedir")
        if self.metric is not None and (self.metric == MetricName.MSE) != regression:
            raise ValueError(f"metric {self.metric.value} does not fit source {self.source.value}")
        if self.loss is not None and (self.loss == LossName.MSE) != regression:
            raise ValueError(f"loss {self.loss.value} does not fit source {self.source.value}")
        if self.schedule == SchedulePreset.BASELINE and self.rate not in (None, 0.0):
            raise ValueError("baseline schedule runs dense Reptile, rate must be 0")
        if (self.interval_iters is None) != (self.ratio is None):
            raise ValueError("interval_iters and ratio must be given together")
        if self.interval_iters is not None and (self.prune_iters is not None or self.retrain_iters is not None):
            raise ValueError("give either interval_iters/ratio or prune_iters/retrain_iters, not both")
        return self

    @property
    def is_regression(self) -> bool:
        return self.source == SourceKind.SINUSOID

    @property
    def resolved_metric(self) -> MetricName:
        return self.metric or (MetricName.MSE if self.is_regression else MetricName.ACCURACY)

    @property
    def resolved_rate(self) -> float:
        if self.schedule == SchedulePreset.BASELINE:
            return 0.0
        return 0.5 if self.rate is None else self.rate

    def loss_kind(self) -> LossKind:
        name = self.loss or (LossName.MSE if self.is_regression else LossName.CROSS_ENTROPY)
        if name == LossName.MARGIN_RAMP:
            return LossKind.margin_ramp(self.margin_gamma)
        return LossKind(name)

    def prune_schedule(self) -> PruneSchedule:
        if self.schedule == SchedulePreset.IHT:
            base = PruneSchedule.iht()
        elif self.schedule == SchedulePreset.BASELINE:
            base = PruneSchedule.baseline()
        else:
            base = PruneSchedule.dsd()

        pretrain = base.pretrain_iters if self.pretrain_iters is None else self.pretrain_iters
        rounds = base.rounds if self.rounds is None else self.rounds
        if self.interval_iters is not None:
            sched = PruneSchedule.from_interval(pretrain, self.interval_iters, self.ratio, rounds)
        else:
            sched = PruneSchedule(
                pretrain_iters=pretrain,
                prune_iters=base.prune_iters if self.prune_iters is None else self.prune_iters,
                retrain_iters=base.retrain_iters if self.retrain_iters is None else self.retrain_iters,
                rounds=rounds,
            )
        return sched.model_copy(update={"outer_decay": self.outer_decay})

    def meta_config(self) -> MetaConfig:
        return MetaConfig(
            inner_lr=self.inner_lr,
            outer_lr=self.outer_lr,
            meta_batch=self.meta_batch,
            inner_iterations=self.inner_iterations,
            inner_batch=self.inner_batch,
            n_way=1 if self.is_regression else self.n_way,
            k_shot=self.k_shot,
            q_query=self.q_query,
            loss=self.loss_kind(),
            total_meta_iterations=max(1, self.prune_schedule().total_iters),
        )
