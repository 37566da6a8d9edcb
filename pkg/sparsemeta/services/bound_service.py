"""
Closed-form generalization-gap bounds for dense and sparse meta-learners.

Constants are the constructive ones of the covering-number argument: an
eps = B/sqrt(M) net of the parameter domain, a Hoeffding tail inverted with a
factor sqrt(2), and for sparse solutions a union over all supports of size k.
Logarithms are natural; covering-number logs are clamped at 0.
"""

from dataclasses import dataclass
from typing import Optional
import math

from sparsemeta.schemas.bounds import BoundInputs


def task_lipschitz(G: float, eta: float, H: float) -> float:
    """Lipschitz constant of the one-step adapted loss, G(1 + eta H)."""
    return G * (1.0 + eta * H)


def covering_log_bound(p: int, R: float, eps: float) -> float:
    """log of (1 + R/eps)^p, the covering number of a radius-R ball in p dims."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if p < 1 or not R > 0:
        raise ValueError(f"need p >= 1 and R > 0, got p={p}, R={R}")
    return p * math.log1p(R / eps)


def support_cardinality_log(p: int, k: int) -> float:
    """k ln(ep/k), an upper bound on ln C(p, k)."""
    if not 1 <= k <= p:
        raise ValueError(f"need 1 <= k <= p, got k={k}, p={p}")
    return k * (1.0 + math.log(p / k))


def _per_dim_log(inputs: BoundInputs) -> float:
    ratio = math.sqrt(inputs.M) * inputs.R * task_lipschitz(inputs.G, inputs.eta, inputs.H) / inputs.B
    return max(0.0, math.log(ratio))


def _assemble(inputs: BoundInputs, complexity: float) -> float:
    B, M = inputs.B, inputs.M
    return 2.0 * B / math.sqrt(M) + math.sqrt(2.0) * B * math.sqrt((math.log(1.0 / inputs.delta) + complexity) / M)


def union_term(inputs: BoundInputs) -> float:
    return support_cardinality_log(inputs.p, inputs.k)


def dense_gap_bound(inputs: BoundInputs) -> float:
    return _assemble(inputs, inputs.p * _per_dim_log(inputs))


def sparse_gap_bound(inputs: BoundInputs, include_union: bool = True) -> float:
    """
    Gap bound for solutions with at most k non-zero parameters.

    include_union=False drops the k ln(ep/k) support-counting term, which makes
    the k == p case coincide with dense_gap_bound.
    """
    complexity = inputs.k * _per_dim_log(inputs)
    if include_union:
        complexity += union_term(inputs)
    return _assemble(inputs, complexity)


def margin_risk_bound(inputs: BoundInputs, empirical_margin_risk: float) -> float:
    if not 0 <= empirical_margin_risk <= inputs.B:
        raise ValueError(f"empirical margin risk must lie in [0, {inputs.B}], got {empirical_margin_risk}")
    return empirical_margin_risk + sparse_gap_bound(inputs)


def theorem_statement_log_term(inputs: BoundInputs) -> float:
    """k ln(p sqrt(M) G R (1 + eta H) / (B k)), clamped at 0; the single-log arrangement of the sparse complexity."""
    ratio = inputs.p * math.sqrt(inputs.M) * inputs.R * task_lipschitz(inputs.G, inputs.eta, inputs.H)
    return max(0.0, inputs.k * math.log(ratio / (inputs.B * inputs.k)))


@dataclass(frozen=True)
class BoundSummary:
    dense: float
    sparse: float
    union: float
    statement_log_term: float
    margin: Optional[float] = None

    @property
    def ratio(self) -> float:
        return self.sparse / self.dense


def summarize(inputs: BoundInputs, empirical_margin_risk: Optional[float] = None) -> BoundSummary:
    return BoundSummary(
        dense=dense_gap_bound(inputs),
        sparse=sparse_gap_bound(inputs),
        union=union_term(inputs),
        statement_log_term=theorem_statement_log_term(inputs),
        margin=None if empirical_margin_risk is None else margin_risk_bound(inputs, empirical_margin_risk),
    )
