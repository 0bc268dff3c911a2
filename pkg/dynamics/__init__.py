"""PCA kernels, IPS generators, exact evolution and kinetic Monte Carlo."""

from .ips import (
    GeneratorMatrix,
    IpsRates,
    RateTerm,
    build_generator,
    generator_apply,
    generator_flow,
    rate_mass,
    semigroup_evolve,
)
from .kmc import Trajectory, gillespie_run, load_trajectory, run_chains, save_trajectory
from .models import MODEL_NAMES, builtin_models, stationary_measure
from .pca import PcaKernel, pca_pushforward, pca_step_sample
from .rng import chain_rng

__all__ = [
    "GeneratorMatrix",
    "IpsRates",
    "RateTerm",
    "build_generator",
    "generator_apply",
    "generator_flow",
    "rate_mass",
    "semigroup_evolve",
    "Trajectory",
    "gillespie_run",
    "load_trajectory",
    "run_chains",
    "save_trajectory",
    "MODEL_NAMES",
    "builtin_models",
    "stationary_measure",
    "PcaKernel",
    "pca_pushforward",
    "pca_step_sample",
    "chain_rng",
]
