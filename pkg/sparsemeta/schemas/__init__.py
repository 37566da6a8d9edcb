from sparsemeta.schemas.experiment import ExperimentConfig, MetaConfig, PruneSchedule
from sparsemeta.schemas.bounds import BoundInputs
from sparsemeta.schemas.metrics import MetricsRecord, Phase

__all__ = [
    "ExperimentConfig",
    "MetaConfig",
    "PruneSchedule",
    "BoundInputs",
    "MetricsRecord",
    "Phase",
]
