"""Exact probability vectors over torus configurations.

An ExactMeasure lives on a set of sites of a TorusGeometry (the whole torus by default).
Entry k of `probs` is the probability of the local configuration whose base-q little-endian
digits, taken in the sorted site order, spell k.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

from config import PROB_TOL
from lattice.errors import BadValue, ZeroConditioning
from lattice.torus import SpinConfig, TorusGeometry, all_states

logger = logging.getLogger(__name__)

_SUM_TOL = 1e-9


def local_states(n: int, q: int) -> np.ndarray:
    """Digit rows of all q**n local configurations, in local index order."""
    return all_states(TorusGeometry.chain(n, q)) if n > 0 else np.zeros((1, 0), dtype=np.uint8)


def marginal_vector(values: np.ndarray, n: int, q: int, keep: Sequence[int]) -> np.ndarray:
    """Sum a vector over configurations of n sites down to the sites at positions `keep` (ascending).

    Works for any signed vector, e.g. a probability flow; a trailing stack axis is allowed.
    """
    values = np.asarray(values)
    stack = values.shape[1:]
    tensor = values.reshape([q] * n + list(stack), order="F")
    drop = tuple(k for k in range(n) if k not in set(keep))
    reduced = tensor.sum(axis=drop) if drop else tensor
    return np.asarray(reduced).reshape((-1,) + stack, order="F")


@dataclass(frozen=True)
class NonNullReport:
    delta: float
    config: Tuple[int, ...]
    site: int
    value: int

    @property
    def witness(self) -> Tuple[Tuple[int, ...], int]:
        return self.config, self.site


@dataclass(frozen=True, eq=False)
class ExactMeasure:
    geometry: TorusGeometry
    probs: np.ndarray
    sites: Tuple[int, ...] | None = None

    def __post_init__(self):
        sites = tuple(range(self.geometry.n_sites)) if self.sites is None else tuple(sorted(set(self.sites)))
        if any(s < 0 or s >= self.geometry.n_sites for s in sites):
            raise BadValue(f"sites {list(sites)} outside the torus {self.geometry.tag()}")
        self.geometry.check_cap(len(sites))
        probs = np.array(self.probs, dtype=np.float64).reshape(-1)
        expected = self.geometry.q ** len(sites)
        if probs.size != expected:
            raise BadValue(f"probability vector has {probs.size} entries, expected {expected}")
        if np.any(~np.isfinite(probs)) or probs.min() < -PROB_TOL:
            raise BadValue("probabilities must be finite and nonnegative")
        probs = np.clip(probs, 0.0, None)
        total = probs.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise BadValue(f"probabilities sum to {total!r}, not 1")
        probs = probs / total
        probs.setflags(write=False)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "probs", probs)

    # constructors

    @classmethod
    def uniform(cls, geom: TorusGeometry, sites: Iterable[int] | None = None) -> "ExactMeasure":
        n = geom.n_sites if sites is None else len(set(sites))
        geom.check_cap(n)
        size = geom.q ** n
        return cls(geom, np.full(size, 1.0 / size), None if sites is None else tuple(sites))

    @classmethod
    def point_mass(cls, cfg: SpinConfig) -> "ExactMeasure":
        geom = cfg.geometry
        geom.check_cap()
        probs = np.zeros(geom.n_configs)
        probs[cfg.index()] = 1.0
        return cls(geom, probs)

    @classmethod
    def product(cls, geom: TorusGeometry, laws: Sequence[float] | np.ndarray) -> "ExactMeasure":
        """Independent sites; `laws` is one law of length q or one per site, shape (N, q)."""
        geom.check_cap()
        laws = np.asarray(laws, dtype=np.float64)
        if laws.ndim == 1:
            laws = np.tile(laws, (geom.n_sites, 1))
        if laws.shape != (geom.n_sites, geom.q):
            raise BadValue(f"site laws must have shape ({geom.n_sites}, {geom.q}), got {laws.shape}")
        probs = laws[0]
        for law in laws[1:]:
            probs = np.kron(law, probs)
        return cls(geom, probs)

    @classmethod
    def bernoulli(cls, geom: TorusGeometry, p: float) -> "ExactMeasure":
        """Product measure with P(state 1) = p (q = 2)."""
        if geom.q != 2:
            raise BadValue("bernoulli product needs q = 2")
        if not 0.0 <= p <= 1.0:
            raise BadValue(f"p must lie in [0, 1], got {p}")
        return cls.product(geom, [1.0 - p, p])

    @classmethod
    def tilted_product(cls, geom: TorusGeometry, tilts: Sequence[float]) -> "ExactMeasure":
        """Site i has law proportional to exp(tilts[i] * a) over states a."""
        tilts = np.asarray(tilts, dtype=np.float64)
        if tilts.shape != (geom.n_sites,):
            raise BadValue(f"need {geom.n_sites} tilts, got {tilts.shape}")
        weights = np.exp(np.outer(tilts, np.arange(geom.q)))
        return cls.product(geom, weights / weights.sum(axis=1, keepdims=True))

    @classmethod
    def random(cls, geom: TorusGeometry, rng: np.random.Generator, alpha: float = 1.0) -> "ExactMeasure":
        geom.check_cap()
        return cls(geom, rng.dirichlet(np.full(geom.n_configs, alpha)))

    @classmethod
    def from_table(cls, geom: TorusGeometry, table: Sequence[float]) -> "ExactMeasure":
        probs = np.asarray(table, dtype=np.float64)
        total = probs.sum()
        if total <= 0:
            raise BadValue("table has no mass")
        return cls(geom, probs / total)

    @classmethod
    def from_weights(cls, geom: TorusGeometry, log_weights: np.ndarray,
                     sites: Iterable[int] | None = None) -> "ExactMeasure":
        shifted = np.exp(np.asarray(log_weights, dtype=np.float64) - np.max(log_weights))
        return cls(geom, shifted / shifted.sum(), None if sites is None else tuple(sites))

    # structure

    @property
    def q(self) -> int:
        return self.geometry.q

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def is_full(self) -> bool:
        return self.n == self.geometry.n_sites

    def states(self) -> np.ndarray:
        return local_states(self.n, self.q)

    def positions(self, sites: Iterable[int]) -> Tuple[int, ...]:
        lookup = {s: k for k, s in enumerate(self.sites)}
        try:
            return tuple(lookup[s] for s in sites)
        except KeyError as exc:
            raise BadValue(f"site {exc.args[0]} is not carried by this measure") from None

    def tensor(self) -> np.ndarray:
        """Probabilities as an array with one axis per site (axis k = self.sites[k])."""
        return self.probs.reshape([self.q] * self.n, order="F")

    def support(self) -> np.ndarray:
        return self.probs > 0

    def expectation(self, values: np.ndarray) -> float:
        return float(np.dot(self.probs, values))

    def to_config(self, index: int) -> Tuple[int, ...]:
        return tuple(int(v) for v in self.states()[index])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n local configurations; rows are states in site order."""
        idx = rng.choice(self.probs.size, size=n, p=self.probs)
        return self.states()[idx]

    # operations

    def marginal(self, sites: Iterable[int]) -> "ExactMeasure":
        target = tuple(sorted(set(sites)))
        self.geometry.check_cap(len(target))
        if target == self.sites:
            return self
        reduced = marginal_vector(self.probs, self.n, self.q, self.positions(target))
        return ExactMeasure(self.geometry, reduced, target)

    def prob(self, assignment: Mapping[int, int]) -> float:
        """Probability of the cylinder fixing `assignment` (site -> state)."""
        if not assignment:
            return 1.0
        for site, value in assignment.items():
            if value < 0 or value >= self.q:
                raise BadValue(f"value {value} at site {site} outside 0..{self.q - 1}")
        sub = self.marginal(assignment.keys())
        index = sum(assignment[s] * self.q ** j for j, s in enumerate(sub.sites))
        return float(sub.probs[index])

    def conditional(self, xi: Mapping[int, int], eta: Mapping[int, int]) -> float:
        overlap = set(xi) & set(eta)
        if overlap:
            raise BadValue(f"event and conditioning share sites {sorted(overlap)}")
        denom = self.prob(eta)
        if denom <= 0:
            raise ZeroConditioning(f"conditioning event {dict(eta)} has probability zero")
        return self.prob({**xi, **eta}) / denom

    def block_conditionals(self, block: Iterable[int]) -> np.ndarray:
        """nu(eta_block | eta_rest) evaluated at every local configuration; nan where undefined."""
        axes = self.positions(block)
        tensor = self.tensor()
        denom = tensor.sum(axis=axes, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(denom > 0, tensor / np.where(denom > 0, denom, 1.0), np.nan)
        return cond.reshape(-1, order="F")

    def single_site_conditionals(self, site: int) -> np.ndarray:
        """Table (configs, q): nu(eta_site = a | eta_rest) for every configuration eta; nan rows undefined."""
        axis = self.positions([site])[0]
        tensor = self.tensor()
        denom = tensor.sum(axis=axis, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(denom > 0, tensor / np.where(denom > 0, denom, 1.0), np.nan)
        shape = tensor.shape
        columns = []
        for a in range(self.q):
            col = np.broadcast_to(np.take(cond, [a], axis=axis), shape)
            columns.append(col.reshape(-1, order="F"))
        return np.stack(columns, axis=1)


def marginal(nu: ExactMeasure, sites: Iterable[int]) -> ExactMeasure:
    return nu.marginal(sites)


def conditional(nu: ExactMeasure, xi: Mapping[int, int], eta: Mapping[int, int]) -> float:
    return nu.conditional(xi, eta)


def nonnullness(nu: ExactMeasure) -> NonNullReport:
    """Smallest single-site conditional over the support, with the configuration, site and value attaining it."""
    best = (np.inf, 0, 0, 0)
    support = np.flatnonzero(nu.support())
    for pos, site in enumerate(nu.sites):
        table = nu.single_site_conditionals(site)[support]
        k = int(np.argmin(table))
        row, value = divmod(k, nu.q)
        if table[row, value] < best[0]:
            best = (float(table[row, value]), int(support[row]), site, value)
    delta, index, site, value = best
    return NonNullReport(delta=delta, config=nu.to_config(index), site=site, value=value)


def chain_rule_bound_check(nu: ExactMeasure, block: Iterable[int], tol: float = 1e-12) -> bool:
    """Every block conditional with positive conditioning mass is at least delta**|block|."""
    block = tuple(block)
    delta = nonnullness(nu).delta
    cond = nu.block_conditionals(block)
    defined = cond[~np.isnan(cond)]
    lowest = float(defined.min()) if defined.size else 1.0
    logger.debug(f"block {block}: min conditional {lowest!r}, delta^|block| {delta ** len(block)!r}")
    return lowest >= delta ** len(block) - tol


def total_variation(nu1: ExactMeasure, nu2: ExactMeasure, sites: Iterable[int] | None = None) -> float:
    if nu1.geometry != nu2.geometry:
        raise BadValue("measures live on different geometries")
    if sites is not None:
        nu1, nu2 = nu1.marginal(sites), nu2.marginal(sites)
    elif nu1.sites != nu2.sites:
        common = sorted(set(nu1.sites) & set(nu2.sites))
        nu1, nu2 = nu1.marginal(common), nu2.marginal(common)
    return 0.5 * float(np.abs(nu1.probs - nu2.probs).sum())
