"""Gibbsianness, non-nullness and martingale diagnostics, and entropy traces."""

from .gibbs import (
    DlrResidualReport,
    PotentialDistanceReport,
    dlr_residual,
    potential_distance,
    potential_distance_report,
    two_site_from_single,
)
from .martingale import (
    MartingaleDiagnostic,
    MartingaleTable,
    finite_volume_martingale,
    martingale_diagnostic,
    uniform_martingale_over_trajectory,
)
from .trajectory import COLUMNS, EntropyTrace, evolve_trajectory, holley_check, trajectory_report, write_trace_csv

__all__ = [
    "DlrResidualReport",
    "PotentialDistanceReport",
    "dlr_residual",
    "potential_distance",
    "potential_distance_report",
    "two_site_from_single",
    "MartingaleDiagnostic",
    "MartingaleTable",
    "finite_volume_martingale",
    "martingale_diagnostic",
    "uniform_martingale_over_trajectory",
    "COLUMNS",
    "EntropyTrace",
    "evolve_trajectory",
    "holley_check",
    "trajectory_report",
    "write_trace_csv",
]
