from sparsemeta.services.reptile_service import reptile_round
from sparsemeta.services.pruning_service import masked_reptile_round, run_schedule
from sparsemeta.services.evaluation_service import evaluate
from sparsemeta.services.experiment_service import run_experiment

__all__ = ["reptile_round", "masked_reptile_round", "run_schedule", "evaluate", "run_experiment"]
