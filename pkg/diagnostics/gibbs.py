"""Gibbsianness checks: DLR residual, two-site reconstruction and potential distance."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

from lattice.errors import BadValue, NonNullViolation, PositivityError
from lattice.torus import TorusGeometry, all_states, boundary_size, replace_sites
from measure.exact import ExactMeasure, nonnullness
from potential.potential import Potential, energies

logger = logging.getLogger(__name__)


@dataclass
class DlrResidualReport:
    max_residual: float
    per_site: Dict[int, float] = field(default_factory=dict)
    witness: Tuple[int, Tuple[int, ...], int] | None = None


def single_site_specification(phi: Potential, geom: TorusGeometry, site: int,
                              energy: np.ndarray | None = None) -> np.ndarray:
    """gamma_site(a | eta) for every configuration eta, shape (configs, q)."""
    energy = energies(phi, geom) if energy is None else energy
    states = all_states(geom)
    indices = np.arange(states.shape[0], dtype=np.int64)
    columns = [energy[replace_sites(geom, indices, states, [site], [a])] for a in range(geom.q)]
    local = -np.stack(columns, axis=1)
    local -= local.max(axis=1, keepdims=True)
    weights = np.exp(local)
    return weights / weights.sum(axis=1, keepdims=True)


def dlr_residual(nu: ExactMeasure, phi: Potential) -> DlrResidualReport:
    """max |nu(a | eta off site) - gamma_site(a | eta)| over sites, values and nu-charged boundaries."""
    if not nu.is_full:
        raise BadValue("DLR residual needs a measure on the whole torus")
    geom = nu.geometry
    energy = energies(phi, geom)
    report = DlrResidualReport(max_residual=0.0)
    for site in range(geom.n_sites):
        cond = nu.single_site_conditionals(site)
        gamma = single_site_specification(phi, geom, site, energy)
        diff = np.abs(cond - gamma)
        diff[np.isnan(diff)] = -1.0
        k = int(np.argmax(diff))
        row, value = divmod(k, geom.q)
        worst = max(float(diff[row, value]), 0.0)
        report.per_site[site] = worst
        if worst > report.max_residual or report.witness is None:
            report.max_residual = max(report.max_residual, worst)
            report.witness = (site, nu.to_config(row), value)
    return report


def two_site_from_single(nu: ExactMeasure, sites: Sequence[int], conditioning: Mapping[int, int] | None = None) -> float:
    """Rebuild nu(xi_1 xi_2 | rest) from the two single-site conditional families; max error vs the direct value.

    With a = nu(s1 | s2, rest) and b = nu(s2 | s1, rest):
        nu(xi_1 xi_2 | rest) = a[xi_1, xi_2] / sum_{x} a[x, xi_2] / b[x, xi_2].
    """
    s1, s2 = sites
    if s1 == s2:
        raise BadValue("two distinct sites are needed")
    report = nonnullness(nu)
    if report.delta <= 0:
        raise NonNullViolation(f"measure is not non-null at site {report.site}")
    p1, p2 = nu.positions([s1, s2])
    tensor = np.moveaxis(nu.tensor(), [p1, p2], [0, 1])
    if conditioning:
        rest = [s for s in nu.sites if s not in (s1, s2)]
        index = tuple(conditioning[s] for s in rest) if set(conditioning) == set(rest) else None
        if index is None:
            raise BadValue("conditioning must fix every other site")
        tensor = tensor[(slice(None), slice(None)) + index]
    mass = tensor.sum(axis=(0, 1), keepdims=True)
    charged = (mass > 0).reshape(mass.shape[2:]) if tensor.ndim > 2 else np.array(True)
    with np.errstate(invalid="ignore", divide="ignore"):
        a = tensor / tensor.sum(axis=0, keepdims=True)
        b = tensor / tensor.sum(axis=1, keepdims=True)
        denom = np.sum(a / b, axis=0, keepdims=True)
        rebuilt = a / denom
        direct = tensor / mass
    error = np.abs(rebuilt - direct)
    error = error[:, :, charged] if tensor.ndim > 2 else error
    return float(np.nanmax(error)) if error.size else 0.0


def potential_distance(nu1: ExactMeasure, nu2: ExactMeasure, sites: Iterable[int]) -> float:
    """(1/|Lambda|) * (max - min)/2 of log(nu1_Lambda / nu2_Lambda)."""
    sites = tuple(sorted(set(sites)))
    p1, p2 = nu1.marginal(sites).probs, nu2.marginal(sites).probs
    if np.any(p1 <= 0) or np.any(p2 <= 0):
        raise PositivityError("potential distance needs strictly positive cylinder probabilities")
    log_ratio = np.log(p1) - np.log(p2)
    return float(log_ratio.max() - log_ratio.min()) / 2.0 / len(sites)


@dataclass(frozen=True)
class PotentialDistanceReport:
    raw: float
    boundary_sites: int
    volume: int
    boundary_term: float

    @property
    def lower(self) -> float:
        return max(self.raw - self.boundary_term, 0.0)

    @property
    def upper(self) -> float:
        return self.raw + self.boundary_term


def potential_distance_report(nu1: ExactMeasure, nu2: ExactMeasure, sites: Iterable[int],
                              constant: float = 1.0, width: int = 1) -> PotentialDistanceReport:
    """Raw estimator plus the boundary term constant * |boundary| / |Lambda|; the constant is the caller's."""
    sites = tuple(sorted(set(sites)))
    raw = potential_distance(nu1, nu2, sites)
    edge = boundary_size(nu1.geometry, sites, width)
    return PotentialDistanceReport(raw=raw, boundary_sites=edge, volume=len(sites),
                                   boundary_term=constant * edge / len(sites))
