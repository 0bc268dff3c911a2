"""Probabilistic cellular automata: synchronous sitewise-independent updates.

The law of the new state at site i depends on the old configuration on the translated
neighbourhood N + i only; the kernel is stored as a table of shape (q**|N|, q).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence, Tuple

import numpy as np

from config import PROB_TOL
from lattice.errors import BadValue
from lattice.torus import Shape, SpinConfig, TorusGeometry, all_states, local_index
from measure.exact import ExactMeasure, local_states

logger = logging.getLogger(__name__)

_CHUNK = 256


@dataclass(frozen=True, eq=False)
class PcaKernel:
    neighborhood: Shape
    table: np.ndarray
    q: int
    name: str = "custom-pca"

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.float64)
        expected = (self.q ** self.neighborhood.size, self.q)
        if table.shape != expected:
            raise BadValue(f"PCA table must have shape {expected}, got {table.shape}")
        if table.min() < 0 or np.max(np.abs(table.sum(axis=1) - 1.0)) > PROB_TOL:
            raise BadValue("every PCA row must be a probability vector")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_rule(cls, neighborhood: Shape, q: int, rule: Callable[[Tuple[int, ...]], Sequence[float]],
                  name: str = "custom-pca") -> "PcaKernel":
        """Tabulate `rule`, called with the neighbourhood states in sorted-offset order."""
        rows = [rule(tuple(int(v) for v in digits)) for digits in local_states(neighborhood.size, q)]
        return cls(neighborhood, np.asarray(rows, dtype=np.float64), q, name)

    @property
    def d(self) -> int:
        return self.neighborhood.dim

    def site_laws(self, geom: TorusGeometry, states: np.ndarray) -> np.ndarray:
        """Array (rows, sites, q) of update laws for each row of `states`."""
        if geom.d != self.d or geom.q != self.q:
            raise BadValue(f"kernel {self.name} does not match torus {geom.tag()}")
        self.neighborhood.require_fit(geom, "PCA neighbourhood")
        out = np.empty((states.shape[0], geom.n_sites, self.q))
        for site in range(geom.n_sites):
            out[:, site, :] = self.table[local_index(states, self.neighborhood.sites(geom, site), self.q)]
        return out


def identity_kernel(d: int, q: int) -> PcaKernel:
    return PcaKernel(Shape.single(d), np.eye(q), q, "pca-identity")


def uniform_kernel(d: int, q: int) -> PcaKernel:
    return PcaKernel(Shape.single(d), np.full((q, q), 1.0 / q), q, "pca-uniform")


def copy_left_kernel(d: int, q: int) -> PcaKernel:
    """Deterministic shift: site i takes the old state of i - e_1."""
    left = tuple(-1 if k == 0 else 0 for k in range(d))
    shape = Shape.of([left, (0,) * d])
    pos = shape.index_of(left)
    return PcaKernel.from_rule(shape, q, lambda nb: np.eye(q)[nb[pos]], "pca-copy-left")


def plurality(values: Sequence[int], own: int, q: int) -> int:
    """Most frequent state; ties go to the own state if it is tied, else to the smallest tied state."""
    counts = np.bincount(np.asarray(values), minlength=q)
    best = np.flatnonzero(counts == counts.max())
    return own if own in best else int(best[0])


def noisy_majority_kernel(d: int, q: int, eps: float, neighborhood: Shape | None = None) -> PcaKernel:
    """Adopt the neighbourhood plurality with probability 1 - eps, otherwise a uniformly chosen other state."""
    if not 0.0 <= eps <= 1.0:
        raise BadValue(f"eps must lie in [0, 1], got {eps}")
    shape = neighborhood or Shape.von_neumann(d)
    origin = shape.index_of((0,) * d)

    def rule(nb: Tuple[int, ...]) -> np.ndarray:
        winner = plurality(nb, nb[origin], q)
        law = np.full(q, eps / (q - 1))
        law[winner] = 1.0 - eps
        return law

    return PcaKernel.from_rule(shape, q, rule, f"pca-majority-eps(eps={eps:g})")


def _push(kernel: PcaKernel, geom: TorusGeometry, vectors: np.ndarray) -> np.ndarray:
    states = all_states(geom)
    targets = states.astype(np.intp)
    sites = np.arange(geom.n_sites)
    out = np.zeros_like(vectors)
    live = np.flatnonzero(np.any(vectors != 0, axis=0))
    for start in range(0, live.size, _CHUNK):
        rows = live[start:start + _CHUNK]
        laws = kernel.site_laws(geom, states[rows])
        # block[r, eta] = prod_i laws[r, i, eta_i]
        block = np.ones((rows.size, targets.shape[0]))
        for site in sites:
            block *= laws[:, site, :][:, targets[:, site]]
        out += vectors[:, rows] @ block
    return out


def pca_pushforward(kernel: PcaKernel, nu: ExactMeasure) -> ExactMeasure:
    if not nu.is_full:
        raise BadValue("pushforward needs a measure on the whole torus")
    nu.geometry.check_cap()
    pushed = pca_pushforward_many(kernel, nu.geometry, nu.probs)[0]
    return ExactMeasure(nu.geometry, pushed / pushed.sum())


def pca_pushforward_many(kernel: PcaKernel, geom: TorusGeometry, vectors: np.ndarray) -> np.ndarray:
    """Push a stack of probability vectors (rows) through the kernel in one pass."""
    geom.check_cap()
    return _push(kernel, geom, np.atleast_2d(np.asarray(vectors, dtype=np.float64)))


def pca_transition_matrix(kernel: PcaKernel, geom: TorusGeometry) -> np.ndarray:
    geom.check_cap()
    return _push(kernel, geom, np.eye(geom.n_configs))


def pca_step_states(kernel: PcaKernel, geom: TorusGeometry, states: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """One synchronous update of each row of `states`."""
    laws = kernel.site_laws(geom, np.atleast_2d(states))
    cumulative = np.cumsum(laws, axis=2)
    u = rng.random(cumulative.shape[:2])[..., None]
    new = (cumulative <= u).sum(axis=2)
    return np.minimum(new, kernel.q - 1).astype(np.uint8)


def pca_step_sample(kernel: PcaKernel, sigma: SpinConfig, rng: np.random.Generator) -> SpinConfig:
    new = pca_step_states(kernel, sigma.geometry, sigma.array()[None, :], rng)[0]
    return SpinConfig(sigma.geometry, tuple(int(v) for v in new))


def pca_stationary(kernel: PcaKernel, geom: TorusGeometry) -> ExactMeasure:
    """Left fixed point of the transition matrix (unique for an irreducible kernel)."""
    matrix = pca_transition_matrix(kernel, geom)
    system = matrix.T - np.eye(matrix.shape[0])
    system[0, :] = 1.0
    rhs = np.zeros(matrix.shape[0])
    rhs[0] = 1.0
    solution = np.linalg.lstsq(system, rhs, rcond=None)[0]
    return ExactMeasure(geom, np.clip(solution, 0.0, None) / np.clip(solution, 0.0, None).sum())
