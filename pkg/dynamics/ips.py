"""Continuous-time interacting particle systems on a torus.

A rate term (region D, support S, table) says: at every anchor i, the region D + i is
rewritten to zeta at rate table[x, zeta], where x is the local index of the old
configuration on S + i and zeta the local index of the new values on D + i.
Entries with zeta equal to the current region values are allowed and cause no jump.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as sparse_linalg
from scipy.stats import poisson

from config import UNIFORMIZATION_TAIL
from lattice.errors import BadValue
from lattice.torus import Shape, TorusGeometry, all_states, local_index, replace_sites
from measure.exact import ExactMeasure, local_states, marginal_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RateTerm:
    region: Shape
    support: Shape
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.float64)
        object.__setattr__(self, "table", table)

    @property
    def sup_rate(self) -> float:
        """sup over the support configuration of the total rate out of it."""
        return float(self.table.sum(axis=1).max()) if self.table.size else 0.0


@dataclass(frozen=True, eq=False)
class IpsRates:
    d: int
    q: int
    terms: Tuple[RateTerm, ...]
    name: str = "custom"

    def __post_init__(self):
        for term in self.terms:
            expected = (self.q ** term.support.size, self.q ** term.region.size)
            if term.table.shape != expected:
                raise BadValue(f"rate table must have shape {expected}, got {term.table.shape}")
            if term.table.min() < 0 or not np.all(np.isfinite(term.table)):
                raise BadValue("rates must be finite and nonnegative")
            if term.region.dim != self.d or term.support.dim != self.d:
                raise BadValue(f"rate shapes must be {self.d}-dimensional")

    @property
    def range(self) -> int:
        return max((max(t.region.radius, t.support.radius) for t in self.terms), default=0)

    def require_fit(self, geom: TorusGeometry) -> None:
        if (geom.d, geom.q) != (self.d, self.q):
            raise BadValue(f"rates {self.name} do not match torus {geom.tag()}")
        for term in self.terms:
            term.region.require_fit(geom, "update region")
            term.support.require_fit(geom, "rate support")


def rate_mass(rates: IpsRates) -> float:
    """Sum over update regions containing the origin of their sup rates."""
    return float(sum(t.region.size * t.sup_rate for t in rates.terms))


@dataclass(frozen=True)
class Move:
    term: int
    anchor: int
    region_sites: Tuple[int, ...]
    zeta: int
    rates: np.ndarray
    targets: np.ndarray


def iter_moves(rates: IpsRates, geom: TorusGeometry, states: np.ndarray | None = None,
               indices: np.ndarray | None = None) -> Iterator[Move]:
    """All (term, anchor, new region values) moves with their rate and target index per configuration row.

    Moves that leave the configuration unchanged are skipped.
    """
    rates.require_fit(geom)
    if states is None:
        states = all_states(geom)
        indices = np.arange(states.shape[0], dtype=np.int64)
    for k, term in enumerate(rates.terms):
        region_digits = local_states(term.region.size, geom.q)
        for anchor in range(geom.n_sites):
            region_sites = term.region.sites(geom, anchor)
            current = local_index(states, region_sites, geom.q)
            row_rates = term.table[local_index(states, term.support.sites(geom, anchor), geom.q)]
            for zeta, digits in enumerate(region_digits):
                col = np.where(current == zeta, 0.0, row_rates[:, zeta])
                if not np.any(col):
                    continue
                targets = replace_sites(geom, indices, states, region_sites, digits)
                yield Move(k, anchor, region_sites, zeta, col, targets)


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    geometry: TorusGeometry
    matrix: sparse.csr_matrix

    @property
    def exit_rates(self) -> np.ndarray:
        return -self.matrix.diagonal()

    def row_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=1)).reshape(-1)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_generator(rates: IpsRates, geom: TorusGeometry) -> GeneratorMatrix:
    geom.check_cap()
    size = geom.n_configs
    rows, cols, data = [], [], []
    origin = np.arange(size, dtype=np.int64)
    for move in iter_moves(rates, geom):
        live = move.rates > 0
        rows.append(origin[live])
        cols.append(move.targets[live])
        data.append(move.rates[live])
    if rows:
        off = sparse.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                                shape=(size, size)).tocsr()
    else:
        off = sparse.csr_matrix((size, size))
    exit_rates = np.asarray(off.sum(axis=1)).reshape(-1)
    matrix = (off - sparse.diags(exit_rates)).tocsr()
    logger.debug(f"generator for {rates.name} on {geom.tag()}: {matrix.nnz} nonzeros")
    return GeneratorMatrix(geom, matrix)


def generator_flow(rates: IpsRates, nu: ExactMeasure) -> np.ndarray:
    """The signed vector nu Q, assembled move by move without forming Q."""
    if not nu.is_full:
        raise BadValue("generator flow needs a measure on the whole torus")
    geom = nu.geometry
    geom.check_cap()
    flow = np.zeros(geom.n_configs)
    for move in iter_moves(rates, geom):
        mass = nu.probs * move.rates
        flow += np.bincount(move.targets, weights=mass, minlength=geom.n_configs)
        flow -= mass
    return flow


def cylinder_flow(rates: IpsRates, nu: ExactMeasure, sites: Sequence[int], flow: np.ndarray | None = None) -> np.ndarray:
    """nu(L 1_omega) for every configuration omega on `sites` (local index order)."""
    flow = generator_flow(rates, nu) if flow is None else flow
    return marginal_vector(flow, nu.n, nu.q, nu.positions(sorted(set(sites))))


def generator_apply(rates: IpsRates, nu: ExactMeasure, cylinder: Mapping[int, int]) -> float:
    sites = sorted(cylinder)
    values = cylinder_flow(rates, nu, sites)
    index = sum(cylinder[s] * nu.q ** j for j, s in enumerate(sites))
    return float(values[index])


def _uniformized(generator: GeneratorMatrix) -> Tuple[float, sparse.csr_matrix]:
    rate = float(generator.exit_rates.max()) if generator.matrix.shape[0] else 0.0
    if rate <= 0:
        return 0.0, sparse.identity(generator.matrix.shape[0], format="csr")
    stochastic = sparse.identity(generator.matrix.shape[0], format="csr") + generator.matrix / rate
    return rate, stochastic.tocsr()


def evolve_vector(generator: GeneratorMatrix, probs: np.ndarray, t: float,
                  tail: float = UNIFORMIZATION_TAIL) -> np.ndarray:
    """e^{tQ^T} applied to `probs` by uniformization; the dropped Poisson tail is below `tail`."""
    if t < 0:
        raise BadValue(f"time must be nonnegative, got {t}")
    rate, stochastic = _uniformized(generator)
    if t == 0 or rate == 0:
        return np.array(probs, dtype=np.float64)
    lam = rate * t
    depth = int(poisson.isf(tail, lam)) + 1
    weights = poisson.pmf(np.arange(depth + 1), lam)
    logger.debug(f"uniformization: rate {rate!r}, t {t!r}, depth {depth}")
    transposed = stochastic.T.tocsr()
    term = np.array(probs, dtype=np.float64)
    out = weights[0] * term
    for k in range(1, depth + 1):
        term = transposed @ term
        out += weights[k] * term
    return out


def semigroup_evolve(rates: IpsRates, nu: ExactMeasure, t: float,
                     generator: GeneratorMatrix | None = None) -> ExactMeasure:
    generator = generator or build_generator(rates, nu.geometry)
    evolved = np.clip(evolve_vector(generator, nu.probs, t), 0.0, None)
    return ExactMeasure(nu.geometry, evolved / evolved.sum())


def evolve_schedule(rates: IpsRates, nu: ExactMeasure, times: Sequence[float]) -> list:
    """Measures at each time of a nondecreasing grid, stepping from one grid point to the next."""
    generator = build_generator(rates, nu.geometry)
    out, current, clock = [], nu, 0.0
    for t in times:
        if t < clock:
            raise BadValue("time grid must be nondecreasing")
        current = semigroup_evolve(rates, current, t - clock, generator)
        clock = t
        out.append(current)
    return out


def ips_stationary(rates: IpsRates, geom: TorusGeometry) -> ExactMeasure:
    """Solve pi Q = 0 with sum(pi) = 1 (unique for an irreducible generator)."""
    generator = build_generator(rates, geom)
    system = generator.matrix.T.tolil()
    system[0, :] = np.ones(geom.n_configs)
    rhs = np.zeros(geom.n_configs)
    rhs[0] = 1.0
    solution = sparse_linalg.spsolve(system.tocsc(), rhs)
    solution = np.clip(solution, 0.0, None)
    return ExactMeasure(geom, solution / solution.sum())
