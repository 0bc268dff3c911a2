"""Local relative entropies and per-site densities over growing volumes."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy.special import rel_entr

from lattice.errors import BadValue
from lattice.torus import box
from measure.exact import ExactMeasure

logger = logging.getLogger(__name__)


def relative_entropy_vectors(p: np.ndarray, q: np.ndarray) -> float:
    """sum p log(p/q) with 0 log 0 = 0; math.inf when p charges a q-null point."""
    value = float(np.sum(rel_entr(p, q)))
    return math.inf if math.isinf(value) else max(value, 0.0)


def local_relative_entropy(nu: ExactMeasure, mu: ExactMeasure, sites: Iterable[int] | None = None) -> float:
    if nu.geometry != mu.geometry:
        raise BadValue("measures live on different geometries")
    if sites is None:
        if nu.sites != mu.sites:
            raise BadValue("measures carry different site sets; pass the volume explicitly")
        return relative_entropy_vectors(nu.probs, mu.probs)
    sites = tuple(sites)
    return relative_entropy_vectors(nu.marginal(sites).probs, mu.marginal(sites).probs)


@dataclass
class EntropyDensityEstimate:
    values: List[Tuple[int, float]] = field(default_factory=list)
    extrapolation: Tuple[float, str] | None = None
    tag: str = ""

    def densities(self) -> List[float]:
        return [v for _, v in self.values]


def richardson(sizes: Sequence[float], values: Sequence[float]) -> float:
    """Remove a c/L correction using the last two points: (L2 h2 - L1 h1) / (L2 - L1)."""
    (l1, h1), (l2, h2) = (sizes[-2], values[-2]), (sizes[-1], values[-1])
    if not (math.isfinite(h1) and math.isfinite(h2)):
        return math.inf if math.inf in (h1, h2) else math.nan
    return (l2 * h2 - l1 * h1) / (l2 - l1)


def _estimate(volumes: List[int], densities: List[float], linear: List[float],
              extrapolate: bool, tag: str) -> EntropyDensityEstimate:
    if any(b <= a for a, b in zip(volumes, volumes[1:])):
        raise BadValue(f"volumes must be strictly increasing, got {volumes}")
    estimate = EntropyDensityEstimate(values=list(zip(volumes, densities)), tag=tag)
    if extrapolate and len(volumes) >= 2:
        estimate.extrapolation = (richardson(linear, densities), "richardson-1/L")
    return estimate


def entropy_density(nu: ExactMeasure, mu: ExactMeasure, schedule: Sequence, extrapolate: bool = False
                    ) -> EntropyDensityEstimate:
    """h_Lambda / |Lambda| along a schedule of box sides (ints) or explicit site sets."""
    geom = nu.geometry
    volumes, densities, linear = [], [], []
    for entry in schedule:
        sites = box(geom, entry) if isinstance(entry, int) else tuple(sorted(set(entry)))
        h = local_relative_entropy(nu, mu, sites)
        volumes.append(len(sites))
        densities.append(h / len(sites))
        linear.append(len(sites) ** (1.0 / geom.d))
    return _estimate(volumes, densities, linear, extrapolate, geom.tag())


def torus_density_sequence(pairs: Sequence[Tuple[ExactMeasure, ExactMeasure]], extrapolate: bool = False
                           ) -> EntropyDensityEstimate:
    """h/|Lambda| of (nu, mu) pairs living on growing tori, each over its whole torus."""
    volumes, densities, linear = [], [], []
    for nu, mu in pairs:
        n = nu.geometry.n_sites
        volumes.append(n)
        densities.append(local_relative_entropy(nu, mu) / n)
        linear.append(n ** (1.0 / nu.geometry.d))
    return _estimate(volumes, densities, linear, extrapolate, "tori")
