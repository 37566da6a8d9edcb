from pydantic import BaseModel, ConfigDict, Field
from enum import Enum

from sparsemeta.models.episode import Split


class Phase(str, Enum):
    PRETRAIN = "pretrain"
    PRUNE = "prune"
    RETRAIN = "retrain"


class MetricsRecord(BaseModel):
    """One evaluation result; accuracy holds -MSE for regression sources."""

    model_config = ConfigDict(frozen=True)

    meta_iter: int = Field(..., ge=0)
    phase: Phase
    split: Split
    accuracy: float = Field(..., le=1.0)
    ci_halfwidth: float = Field(..., ge=0.0)
    loss: float
    current_rate: float = Field(..., ge=0.0, le=1.0)


class GapRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    meta_iter: int
    phase: Phase
    train_accuracy: float
    test_accuracy: float

    @property
    def gap(self) -> float:
        return self.train_accuracy - self.test_accuracy
