"""Finite-range translation-invariant potentials and everything computed from them on a torus.

A potential is a list of terms (Shape, table). Shapes are stored by their canonical anchored
representative: the translate whose lexicographically smallest offset is the zero vector.
Tables hold q**|A| energies in local ConfigIndex order over the shape's sorted offsets.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from lattice.errors import BadValue
from lattice.torus import Shape, SpinConfig, TorusGeometry, all_states, local_index
from measure.exact import ExactMeasure, local_states

logger = logging.getLogger(__name__)


class _Periodic:
    def __repr__(self) -> str:
        return "PERIODIC"


PERIODIC = _Periodic()


def _reorder_table(offsets: Sequence[Sequence[int]], table: np.ndarray, q: int) -> Tuple[Shape, np.ndarray]:
    """Sort offsets lexicographically, permute table digits to match, then shift so the first offset is 0."""
    offsets = [tuple(int(c) for c in o) for o in offsets]
    n = len(offsets)
    if len(set(offsets)) != n:
        raise BadValue(f"duplicate offsets in potential term: {offsets}")
    table = np.asarray(table, dtype=np.float64).reshape(-1)
    if table.size != q ** n:
        raise BadValue(f"term on {n} sites needs {q ** n} table entries, got {table.size}")
    order = sorted(range(n), key=lambda j: offsets[j])
    tensor = table.reshape([q] * n, order="F").transpose(order)
    base = offsets[order[0]]
    shifted = [tuple(c - b for c, b in zip(offsets[j], base)) for j in order]
    return Shape.of(shifted), tensor.reshape(-1, order="F")


@dataclass(frozen=True, eq=False)
class PotentialTerm:
    shape: Shape
    table: np.ndarray

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.table))) if self.table.size else 0.0


@dataclass(frozen=True, eq=False)
class Potential:
    d: int
    q: int
    terms: Tuple[PotentialTerm, ...] = ()
    name: str = "custom"

    @classmethod
    def from_terms(cls, d: int, q: int, raw: Iterable[Tuple[Sequence[Sequence[int]], Sequence[float]]],
                   name: str = "custom") -> "Potential":
        merged: Dict[Shape, np.ndarray] = {}
        for offsets, table in raw:
            if any(len(o) != d for o in offsets):
                raise BadValue(f"offsets {list(offsets)} are not {d}-dimensional")
            shape, canon = _reorder_table(offsets, table, q)
            merged[shape] = merged[shape] + canon if shape in merged else canon
        terms = tuple(PotentialTerm(shape, table) for shape, table in sorted(merged.items(), key=lambda kv: kv[0].offsets))
        return cls(d, q, terms, name)

    @classmethod
    def zero(cls, d: int, q: int) -> "Potential":
        return cls(d, q, (), "zero")

    @classmethod
    def from_json(cls, data: Mapping, geom: TorusGeometry) -> "Potential":
        preset = data.get("preset")
        if preset == "ising":
            return ising(float(data.get("beta", 1.0)), float(data.get("h", 0.0)), geom.d)
        if preset == "potts":
            return potts(float(data.get("beta", 1.0)), geom.q, geom.d)
        if preset == "zero":
            return cls.zero(geom.d, geom.q)
        if preset is not None:
            raise BadValue(f"unknown potential preset '{preset}'")
        raw = [(term["offsets"], term["table"]) for term in data.get("terms", [])]
        return cls.from_terms(geom.d, geom.q, raw, data.get("name", "custom"))

    def to_json(self) -> Dict:
        return {
            "name": self.name,
            "terms": [{"offsets": [list(o) for o in t.shape.offsets], "table": t.table.tolist()} for t in self.terms],
        }

    @property
    def range(self) -> int:
        """Largest sup-norm offset among anchored translates of the shapes."""
        out = 0
        for term in self.terms:
            for shifted, _ in term.shape.anchored_translates():
                out = max(out, shifted.radius)
        return out

    def __add__(self, other: "Potential") -> "Potential":
        if (self.d, self.q) != (other.d, other.q):
            raise BadValue("potentials live on different state spaces")
        raw = [(t.shape.offsets, t.table) for t in self.terms + other.terms]
        return Potential.from_terms(self.d, self.q, raw, f"{self.name}+{other.name}")

    def scale(self, factor: float) -> "Potential":
        return Potential(self.d, self.q, tuple(PotentialTerm(t.shape, t.table * factor) for t in self.terms),
                         f"{factor:g}*{self.name}")

    def require_fit(self, geom: TorusGeometry) -> None:
        if (geom.d, geom.q) != (self.d, self.q):
            raise BadValue(f"potential is for d={self.d}, q={self.q}; torus is {geom.tag()}")
        for term in self.terms:
            term.shape.require_fit(geom, "potential shape")


def _spin(a: int) -> int:
    return 2 * a - 1


def ising(beta: float, h: float = 0.0, d: int = 1) -> Potential:
    """Nearest-neighbour Ising: -beta*s_i*s_j per bond, -h*s_i per site; state 1 is spin +1."""
    raw = []
    for k in range(d):
        e = tuple(1 if j == k else 0 for j in range(d))
        table = [-beta * _spin(a0) * _spin(a1) for a1 in (0, 1) for a0 in (0, 1)]
        raw.append((((0,) * d, e), table))
    if h != 0.0:
        raw.append((((0,) * d,), [-h * _spin(0), -h * _spin(1)]))
    return Potential.from_terms(d, 2, raw, f"ising(beta={beta:g},h={h:g})")


def potts(beta: float, q: int, d: int = 1) -> Potential:
    """Nearest-neighbour Potts: -beta per aligned bond."""
    raw = []
    for k in range(d):
        e = tuple(1 if j == k else 0 for j in range(d))
        table = [-beta * float(a0 == a1) for a1 in range(q) for a0 in range(q)]
        raw.append((((0,) * d, e), table))
    return Potential.from_terms(d, q, raw, f"potts(beta={beta:g},q={q})")


def norm_phi(phi: Potential) -> float:
    """Sum over sets A containing 0 of sup|Phi_A|; each shape has |A| such translates."""
    return float(sum(t.shape.size * t.sup for t in phi.terms))


def norm_phi_zero(phi: Potential) -> float:
    return float(sum(t.sup for t in phi.terms))


def neighborhood(phi: Potential) -> Shape:
    """Sites sharing an interaction set with the origin (the origin included)."""
    offsets = {(0,) * phi.d}
    for term in phi.terms:
        for shifted, _ in term.shape.anchored_translates():
            offsets.update(shifted.offsets)
    return Shape.of(offsets)


def placements(phi: Potential, geom: TorusGeometry, volume: Iterable[int] | None = None
               ) -> List[Tuple[PotentialTerm, Tuple[int, ...]]]:
    """Every translate of every term (as a site tuple); only those meeting `volume` when given."""
    phi.require_fit(geom)
    inside = None if volume is None else set(volume)
    out = []
    for term in phi.terms:
        for anchor in range(geom.n_sites):
            sites = term.shape.sites(geom, anchor)
            if inside is None or inside.intersection(sites):
                out.append((term, sites))
    return out


def energy_of_states(phi: Potential, geom: TorusGeometry, states: np.ndarray,
                     volume: Iterable[int] | None = None) -> np.ndarray:
    """Hamiltonian of each row of `states`, summing the translates that meet `volume`."""
    energy = np.zeros(states.shape[0])
    for term, sites in placements(phi, geom, volume):
        energy += term.table[local_index(states, sites, geom.q)]
    return energy


def energies(phi: Potential, geom: TorusGeometry) -> np.ndarray:
    """Periodic Hamiltonian of every configuration, in ConfigIndex order."""
    return energy_of_states(phi, geom, all_states(geom))


def hamiltonian(phi: Potential, volume: Iterable[int], interior: SpinConfig, boundary=PERIODIC) -> float:
    geom = interior.geometry
    volume = tuple(volume)
    if boundary is PERIODIC:
        states = interior.array()
    else:
        if boundary.geometry != geom:
            raise BadValue("boundary and interior live on different tori")
        states = boundary.array()
        states[list(volume)] = interior.array()[list(volume)]
    return float(energy_of_states(phi, geom, states[None, :], volume)[0])


def specification(phi: Potential, volume: Iterable[int], boundary) -> ExactMeasure:
    """Finite-volume Gibbs kernel on `volume` given the configuration outside it."""
    volume = tuple(sorted(set(volume)))
    if boundary is PERIODIC:
        raise BadValue("a periodic specification is the torus Gibbs measure; use gibbs_measure")
    geom = boundary.geometry
    geom.check_cap(len(volume))
    local = local_states(len(volume), geom.q)
    rows = np.tile(boundary.array(), (local.shape[0], 1))
    rows[:, list(volume)] = local
    energy = energy_of_states(phi, geom, rows, volume)
    return ExactMeasure.from_weights(geom, -energy, volume)


@dataclass(frozen=True, eq=False)
class SpecificationKernel:
    potential: Potential
    geometry: TorusGeometry
    volume: Tuple[int, ...]
    boundary: object = PERIODIC

    def measure(self) -> ExactMeasure:
        if self.boundary is PERIODIC:
            return gibbs_measure(self.potential, self.geometry).marginal(self.volume)
        return specification(self.potential, self.volume, self.boundary)


def gibbs_measure(phi: Potential, geom: TorusGeometry) -> ExactMeasure:
    """Periodic torus Gibbs measure proportional to exp(-H)."""
    return ExactMeasure.from_weights(geom, -energies(phi, geom))


def log_partition(phi: Potential, geom: TorusGeometry) -> float:
    return float(logsumexp(-energies(phi, geom)))


def pressure(phi: Potential, geom: TorusGeometry) -> float:
    value = log_partition(phi, geom) / geom.n_sites
    logger.debug(f"pressure of {phi.name} on {geom.tag()}: {value!r}")
    return value


def anchored_energy_density(phi: Potential, geom: TorusGeometry) -> np.ndarray:
    """f(eta) = sum over sets A containing the origin of Phi_A(eta) / |A|, for every configuration."""
    phi.require_fit(geom)
    states = all_states(geom)
    out = np.zeros(states.shape[0])
    for term in phi.terms:
        for shifted, _ in term.shape.anchored_translates():
            sites = shifted.sites(geom, 0)
            out += term.table[local_index(states, sites, geom.q)] / term.shape.size
    return out


def specific_energy(nu: ExactMeasure, phi: Potential, anchored: bool = True) -> float:
    """Expectation of the anchored energy density, the sum over A containing 0 of Phi_A / |A|.

    With anchored=False this is E_nu[H] / |Lambda| instead, the site average of the same density.
    The two agree for translation-invariant nu only.
    """
    if not nu.is_full:
        raise BadValue("specific energy needs a measure on the whole torus")
    if anchored:
        return nu.expectation(anchored_energy_density(phi, nu.geometry))
    return nu.expectation(energies(phi, nu.geometry)) / nu.geometry.n_sites


def nonnull_lower_bound(phi: Potential) -> float:
    """Single-site conditionals of any Gibbs measure for phi are at least exp(-2||Phi||)/q."""
    return math.exp(-2.0 * norm_phi(phi)) / phi.q
