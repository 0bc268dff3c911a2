"""Entropy loss of a measure under PCA and IPS dynamics, and its energy/entropy splits.

Every quantity is a density: totals over the torus (or over a volume) divided by its size.
For an IPS on the whole torus with mu the torus Gibbs measure of Phi,
    direct loss = entropy production representation + energy pairing
holds exactly for strictly positive nu.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from lattice.errors import BadValue, NonNullViolation, PositivityError
from lattice.torus import TorusGeometry
from measure.exact import ExactMeasure, nonnullness
from potential.potential import Potential, energies, gibbs_measure, norm_phi, pressure, specific_energy
from dynamics.ips import IpsRates, cylinder_flow, iter_moves, rate_mass
from dynamics.pca import PcaKernel, pca_pushforward
from .relative import local_relative_entropy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossReport:
    g_direct: float
    g_representation: float
    pairing: float
    discrepancy: float


@dataclass(frozen=True)
class DiscreteLossReport:
    g_direct: float
    energy_change: float
    entropy_change: float
    discrepancy: float


def _volume(nu: ExactMeasure, sites: Iterable[int] | None):
    return tuple(range(nu.geometry.n_sites)) if sites is None else tuple(sorted(set(sites)))


def discrete_loss_gP(kernel: PcaKernel, nu: ExactMeasure, mu: ExactMeasure, sites: Iterable[int] | None = None,
                     pushed: ExactMeasure | None = None) -> float:
    """(h(P nu | mu) - h(nu | mu)) / |Lambda|; inf - inf gives nan, a finite minus inf gives -inf."""
    volume = _volume(nu, sites)
    pushed = pushed or pca_pushforward(kernel, nu)
    after = local_relative_entropy(pushed, mu, volume)
    before = local_relative_entropy(nu, mu, volume)
    with np.errstate(invalid="ignore"):
        return float(np.float64(after) - np.float64(before)) / len(volume)


def continuous_loss_direct(rates: IpsRates, nu: ExactMeasure, mu: ExactMeasure,
                           sites: Iterable[int] | None = None, flow: np.ndarray | None = None) -> float:
    """d/dt h_Lambda(P_t nu | mu) at t = 0, per site, from the cylinder flows nu(L 1_omega)."""
    volume = _volume(nu, sites)
    values = cylinder_flow(rates, nu, volume, flow)
    nu_l, mu_l = nu.marginal(volume).probs, mu.marginal(volume).probs
    active = values != 0
    if np.any(active & ((nu_l <= 0) | (mu_l <= 0))):
        raise PositivityError("probability flows into or out of a null cylinder")
    total = np.sum(values[active] * (np.log(nu_l[active]) - np.log(mu_l[active])))
    return float(total) / len(volume)


def _expected_increment(rates: IpsRates, nu: ExactMeasure, values: np.ndarray, mask: np.ndarray | None = None) -> float:
    """(1/N) sum over moves and eta of nu(eta) c(eta, move) (values[target] - values[eta])."""
    total = 0.0
    weights = nu.probs if mask is None else np.where(mask, nu.probs, 0.0)
    for move in iter_moves(rates, nu.geometry):
        live = (weights > 0) & (move.rates > 0)
        if not np.any(live):
            continue
        diff = values[move.targets[live]] - values[live]
        total += float(np.sum(weights[live] * move.rates[live] * diff))
    return total / nu.geometry.n_sites


def entropy_production_rep(nu: ExactMeasure, rates: IpsRates) -> float:
    """Torus version of the conditional-ratio representation of the entropy production."""
    if not nu.is_full:
        raise BadValue("entropy production needs a measure on the whole torus")
    report = nonnullness(nu)
    if report.delta <= 0:
        raise NonNullViolation(f"measure is not non-null: witness site {report.site}, value {report.value}")
    support = nu.probs > 0
    with np.errstate(divide="ignore"):
        log_nu = np.where(support, np.log(np.where(support, nu.probs, 1.0)), -np.inf)
    return _expected_increment(rates, nu, log_nu, support)


def pairing_L(nu: ExactMeasure, phi: Potential, rates: IpsRates) -> float:
    """Expected energy change per site per unit time under the rates."""
    if not phi.terms:
        return 0.0
    return _expected_increment(rates, nu, energies(phi, nu.geometry))


def pairing_bound(phi: Potential, rates: IpsRates) -> float:
    return 2.0 * norm_phi(phi) * rate_mass(rates)


def loss_decomposition(nu: ExactMeasure, mu: ExactMeasure, phi: Potential, rates: IpsRates) -> LossReport:
    direct = continuous_loss_direct(rates, nu, mu)
    rep = entropy_production_rep(nu, rates)
    pair = pairing_L(nu, phi, rates)
    return LossReport(g_direct=direct, g_representation=rep, pairing=pair, discrepancy=abs(direct - (rep + pair)))


def gibbs_pairing_loss(nu: ExactMeasure, phi_nu: Potential, phi: Potential, rates: IpsRates) -> LossReport:
    """For nu the torus Gibbs measure of phi_nu: loss relative to Gibbs(phi) = pairing(phi) - pairing(phi_nu)."""
    mu = gibbs_measure(phi, nu.geometry)
    own = pairing_L(nu, phi_nu, rates)
    pair = pairing_L(nu, phi, rates)
    direct = continuous_loss_direct(rates, nu, mu)
    value = pair - own
    return LossReport(g_direct=direct, g_representation=-own, pairing=pair, discrepancy=abs(direct - value))


def discrete_loss_decomposition(kernel: PcaKernel, nu: ExactMeasure, phi: Potential) -> DiscreteLossReport:
    """g_P(nu | Gibbs(phi)) split into the change of specific energy and of h(.|uniform)."""
    geom = nu.geometry
    mu = gibbs_measure(phi, geom)
    uniform = ExactMeasure.uniform(geom)
    pushed = pca_pushforward(kernel, nu)
    direct = discrete_loss_gP(kernel, nu, mu, pushed=pushed)
    energy_change = specific_energy(pushed, phi, anchored=False) - specific_energy(nu, phi, anchored=False)
    entropy_change = (local_relative_entropy(pushed, uniform) - local_relative_entropy(nu, uniform)) / geom.n_sites
    split = energy_change + entropy_change
    discrepancy = abs(direct - split) if math.isfinite(direct) else math.nan
    return DiscreteLossReport(g_direct=direct, energy_change=energy_change, entropy_change=entropy_change,
                              discrepancy=discrepancy)


def pressure_decomposition_check(nu: ExactMeasure, mu: ExactMeasure, phi: Potential,
                                 geom: TorusGeometry | None = None) -> float:
    """|h(nu|mu)/N - (p(Phi) + <nu,Phi> + h(nu|u)/N - log q)| on the torus."""
    geom = geom or nu.geometry
    if geom != nu.geometry:
        raise BadValue("measure does not live on the given torus")
    n = geom.n_sites
    left = local_relative_entropy(nu, mu) / n
    uniform = ExactMeasure.uniform(geom)
    right = (pressure(phi, geom) + specific_energy(nu, phi, anchored=False)
             + local_relative_entropy(nu, uniform) / n - math.log(geom.q))
    residual = abs(left - right)
    logger.debug(f"pressure decomposition residual {residual!r}")
    return residual
