from sparsemeta.models.losses import LossKind, LossName
from sparsemeta.models.network import GradientSet, LayerKind, LayerSpec, Network
from sparsemeta.models.episode import Split, TaskEpisode
from sparsemeta.models.sparsity import SparsityMask, SparsityPlan

__all__ = [
    "LossKind",
    "LossName",
    "GradientSet",
    "LayerKind",
    "LayerSpec",
    "Network",
    "Split",
    "TaskEpisode",
    "SparsityMask",
    "SparsityPlan",
]
