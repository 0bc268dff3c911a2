"""Martingale diagnostics: how fast conditionals on growing annuli approach the full-complement conditional.

On a torus the complement of a block is proxied by the rest of the torus (Lambda_max);
the last row of every table therefore compares Lambda_max with itself and is 0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from lattice.errors import BadValue, NonNullViolation
from lattice.torus import all_states, ball, local_index
from measure.exact import ExactMeasure, local_states, nonnullness

logger = logging.getLogger(__name__)

DEFAULT_DECAY = 0.5


@dataclass
class MartingaleDiagnostic:
    block: Tuple[int, ...]
    rows: List[Tuple[int, float, float]] = field(default_factory=list)

    def values(self) -> List[float]:
        return [value for _, value, _ in self.rows]

    def sup(self) -> float:
        return max(self.values(), default=0.0)


def _volumes(nu: ExactMeasure, block: Tuple[int, ...], schedule: Iterable) -> List[Tuple[int, ...]]:
    geom = nu.geometry
    center = block[0]
    out = []
    for entry in schedule:
        sites = ball(geom, entry, center) if isinstance(entry, int) else tuple(sorted(set(entry)))
        if not set(block) <= set(sites):
            raise BadValue(f"annulus {list(sites)} does not contain the block {list(block)}")
        out.append(tuple(sorted(set(sites) | set(block))))
    full = tuple(range(geom.n_sites))
    if not out or out[-1] != full:
        out.append(full)
    sizes = [len(v) for v in out]
    if any(b < a for a, b in zip(sizes, sizes[1:])):
        raise BadValue(f"annuli must grow, got sizes {sizes}")
    return out


def _conditional_at(nu_sub: ExactMeasure, block: Tuple[int, ...], states: np.ndarray, patched_digits) -> np.ndarray:
    """nu_sub(xi_block | eta on the other sub-sites) evaluated for every full configuration eta."""
    cond = np.nan_to_num(nu_sub.block_conditionals(block))
    rows = states.copy()
    rows[:, list(block)] = patched_digits
    return cond[local_index(rows, nu_sub.sites, nu_sub.q)]


def finite_volume_martingale(nu: ExactMeasure, block: Sequence[int], schedule: Iterable) -> MartingaleDiagnostic:
    """Rows (|Lambda_k|, sum over xi of E|nu(xi|Lambda_k off block) - nu(xi|Lambda_max off block)|, max over xi)."""
    if not nu.is_full:
        raise BadValue("martingale diagnostics need a measure on the whole torus")
    block = tuple(block)
    report = nonnullness(nu)
    if report.delta <= 0:
        raise NonNullViolation(f"measure is not non-null at site {report.site}")
    states = all_states(nu.geometry)
    volumes = _volumes(nu, block, schedule)
    choices = local_states(len(block), nu.q)
    reference = [_conditional_at(nu, block, states, xi) for xi in choices]
    out = MartingaleDiagnostic(block=block)
    for sites in volumes:
        sub = nu.marginal(sites)
        per_xi = []
        for xi, ref in zip(choices, reference):
            approx = _conditional_at(sub, block, states, xi)
            per_xi.append(float(np.dot(nu.probs, np.abs(approx - ref))))
        out.rows.append((len(sites), float(sum(per_xi)), max(per_xi)))
    return out


def martingale_diagnostic(nu: ExactMeasure, schedule: Iterable, site: int = 0) -> MartingaleDiagnostic:
    """Single-site martingale diagnostic; integers in `schedule` are sup-norm radii around `site`."""
    return finite_volume_martingale(nu, (site,), schedule)


@dataclass
class MartingaleTable:
    times: List[float]
    sizes: List[int]
    values: np.ndarray
    delta_floor: float
    decay_factor: float = DEFAULT_DECAY

    @property
    def column_sup(self) -> np.ndarray:
        return self.values.max(axis=0) if self.values.size else np.zeros(0)

    @property
    def decay_flags(self) -> List[bool]:
        sup = self.column_sup
        return [bool(b <= self.decay_factor * a + 1e-12) for a, b in zip(sup[:-1], sup[1:])]

    @property
    def decays(self) -> bool:
        return all(self.decay_flags)


def uniform_martingale_over_trajectory(trajectory: Sequence[Tuple[float, ExactMeasure]], schedule: Sequence,
                                       site: int = 0, decay_factor: float = DEFAULT_DECAY) -> MartingaleTable:
    """Table of diagnostics (time x annulus) with the sup over time of each column."""
    rows, sizes, floor = [], [], 1.0
    for t, nu in trajectory:
        report = nonnullness(nu)
        if report.delta <= 0:
            raise NonNullViolation(f"measure is not non-null at site {report.site}", t=t)
        floor = min(floor, report.delta)
        diag = martingale_diagnostic(nu, schedule, site)
        sizes = [size for size, _, _ in diag.rows]
        rows.append(diag.values())
    values = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(sizes))
    return MartingaleTable(times=[t for t, _ in trajectory], sizes=sizes, values=values,
                           delta_floor=floor, decay_factor=decay_factor)
