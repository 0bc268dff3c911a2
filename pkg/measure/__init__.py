"""Exact and empirical measures on torus configuration spaces."""

from .empirical import (
    SampleEnsemble,
    empirical_measure,
    estimate_conditional,
    estimate_marginal,
    load_ensemble,
    save_ensemble,
)
from .exact import (
    ExactMeasure,
    NonNullReport,
    chain_rule_bound_check,
    conditional,
    marginal,
    nonnullness,
    total_variation,
)

__all__ = [
    "SampleEnsemble",
    "empirical_measure",
    "estimate_conditional",
    "estimate_marginal",
    "load_ensemble",
    "save_ensemble",
    "ExactMeasure",
    "NonNullReport",
    "chain_rule_bound_check",
    "conditional",
    "marginal",
    "nonnullness",
    "total_variation",
]
