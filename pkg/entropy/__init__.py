"""Relative entropies, entropy densities and entropy-loss functionals."""

from .loss import (
    DiscreteLossReport,
    LossReport,
    continuous_loss_direct,
    discrete_loss_decomposition,
    discrete_loss_gP,
    entropy_production_rep,
    gibbs_pairing_loss,
    loss_decomposition,
    pairing_L,
    pressure_decomposition_check,
)
from .relative import EntropyDensityEstimate, entropy_density, local_relative_entropy, torus_density_sequence

__all__ = [
    "DiscreteLossReport",
    "LossReport",
    "continuous_loss_direct",
    "discrete_loss_decomposition",
    "discrete_loss_gP",
    "entropy_production_rep",
    "gibbs_pairing_loss",
    "loss_decomposition",
    "pairing_L",
    "pressure_decomposition_check",
    "EntropyDensityEstimate",
    "entropy_density",
    "local_relative_entropy",
    "torus_density_sequence",
]
