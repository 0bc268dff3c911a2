"""Translation-invariant finite-range potentials: norms, Hamiltonians, specifications, pressure."""

from .potential import (
    PERIODIC,
    Potential,
    PotentialTerm,
    SpecificationKernel,
    energies,
    gibbs_measure,
    hamiltonian,
    ising,
    neighborhood,
    norm_phi,
    norm_phi_zero,
    potts,
    pressure,
    specific_energy,
    specification,
)
from .transfer_matrix import transfer_matrix_pressure

__all__ = [
    "PERIODIC",
    "Potential",
    "PotentialTerm",
    "SpecificationKernel",
    "energies",
    "gibbs_measure",
    "hamiltonian",
    "ising",
    "neighborhood",
    "norm_phi",
    "norm_phi_zero",
    "potts",
    "pressure",
    "specific_energy",
    "specification",
    "transfer_matrix_pressure",
]
