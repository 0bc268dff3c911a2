"""Monte Carlo surrogates for a measure: weighted sample ensembles and cylinder-frequency estimates."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

from config import EMPIRICAL_MIN_COUNT
from lattice.errors import BadValue, EmptyEnsemble
from lattice.torus import SpinConfig, TorusGeometry, local_index
from .exact import ExactMeasure

logger = logging.getLogger(__name__)

INSUFFICIENT = "insufficient data"


@dataclass(frozen=True, eq=False)
class SampleEnsemble:
    geometry: TorusGeometry
    samples: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.uint8)
        if samples.ndim != 2 or samples.shape[0] == 0:
            raise EmptyEnsemble("ensemble needs at least one sample")
        if samples.shape[1] != self.geometry.n_sites:
            raise BadValue(f"samples have {samples.shape[1]} sites, torus has {self.geometry.n_sites}")
        if samples.max() >= self.geometry.q:
            raise BadValue(f"sample states outside 0..{self.geometry.q - 1}")
        object.__setattr__(self, "samples", samples)
        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=np.float64)
            if weights.shape != (samples.shape[0],):
                raise BadValue(f"{weights.size} weights for {samples.shape[0]} samples")
            if weights.min() < 0 or abs(weights.sum() - 1.0) > 1e-9:
                raise BadValue("weights must be nonnegative and sum to 1")
            object.__setattr__(self, "weights", weights / weights.sum())

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def normalized_weights(self) -> np.ndarray:
        if self.weights is None:
            return np.full(self.n_samples, 1.0 / self.n_samples)
        return self.weights

    @property
    def effective_size(self) -> float:
        """Kish effective sample size 1 / sum(w^2)."""
        w = self.normalized_weights()
        return float(1.0 / np.sum(w * w))

    def configs(self) -> list:
        return [SpinConfig(self.geometry, tuple(row)) for row in self.samples]


@dataclass(frozen=True)
class MarginalEstimate:
    sites: Tuple[int, ...]
    probs: np.ndarray
    stderr: np.ndarray
    n_eff: float

    def to_measure(self, geometry: TorusGeometry) -> ExactMeasure:
        return ExactMeasure(geometry, self.probs, self.sites)


@dataclass(frozen=True)
class ConditionalEstimate:
    value: float | None
    stderr: float | None
    count: int
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def empirical_measure(samples, geometry: TorusGeometry | None = None,
                      weights: Sequence[float] | None = None) -> SampleEnsemble:
    """Build an ensemble from SpinConfigs or from a (n, N) state array."""
    if isinstance(samples, np.ndarray):
        if geometry is None:
            raise BadValue("a geometry is required for raw sample arrays")
        return SampleEnsemble(geometry, samples, None if weights is None else np.asarray(weights))
    samples = list(samples)
    if not samples:
        raise EmptyEnsemble("ensemble needs at least one sample")
    geom = geometry or samples[0].geometry
    rows = np.asarray([cfg.states for cfg in samples], dtype=np.uint8)
    return SampleEnsemble(geom, rows, None if weights is None else np.asarray(weights))


def estimate_marginal(ens: SampleEnsemble, sites: Iterable[int]) -> MarginalEstimate:
    sites = tuple(sorted(set(sites)))
    q = ens.geometry.q
    ens.geometry.check_cap(len(sites))
    idx = local_index(ens.samples, sites, q)
    probs = np.bincount(idx, weights=ens.normalized_weights(), minlength=q ** len(sites))
    n_eff = ens.effective_size
    stderr = np.sqrt(np.clip(probs * (1.0 - probs), 0.0, None) / n_eff)
    return MarginalEstimate(sites=sites, probs=probs, stderr=stderr, n_eff=n_eff)


def _matches(ens: SampleEnsemble, assignment: Mapping[int, int]) -> np.ndarray:
    mask = np.ones(ens.n_samples, dtype=bool)
    for site, value in assignment.items():
        mask &= ens.samples[:, site] == value
    return mask


def estimate_conditional(ens: SampleEnsemble, xi: Mapping[int, int], eta: Mapping[int, int],
                         min_count: int = EMPIRICAL_MIN_COUNT) -> ConditionalEstimate:
    """Cylinder-frequency ratio nu(xi and eta) / nu(eta); below `min_count` conditioning hits it reports no number."""
    if set(xi) & set(eta):
        raise BadValue("event and conditioning share sites")
    base = _matches(ens, eta)
    count = int(base.sum())
    if count < min_count:
        return ConditionalEstimate(value=None, stderr=None, count=count, status=INSUFFICIENT)
    w = ens.normalized_weights()
    denom = float(w[base].sum())
    if denom <= 0:
        return ConditionalEstimate(value=None, stderr=None, count=count, status=INSUFFICIENT)
    value = float(w[base & _matches(ens, xi)].sum()) / denom
    return ConditionalEstimate(value=value, stderr=float(np.sqrt(value * (1.0 - value) / count)), count=count)


def save_ensemble(ens: SampleEnsemble, path: str) -> str:
    """Write geometry header plus packed configurations to an .npz file."""
    geom = ens.geometry
    payload = {"d": geom.d, "sides": np.asarray(geom.sides), "q": geom.q}
    if geom.bits <= 62:
        payload["indices"] = local_index(ens.samples, range(geom.n_sites), geom.q)
    else:
        payload["states"] = ens.samples
    if ens.weights is not None:
        payload["weights"] = ens.weights
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    np.savez_compressed(path, **payload)
    logger.info(f"ensemble of {ens.n_samples} samples saved to {path}")
    return path


def load_ensemble(path: str) -> SampleEnsemble:
    with np.load(path) as data:
        geom = TorusGeometry(int(data["d"]), tuple(int(s) for s in data["sides"]), int(data["q"]))
        if "indices" in data:
            idx = data["indices"].astype(np.int64)
            states = np.empty((idx.size, geom.n_sites), dtype=np.uint8)
            for site in range(geom.n_sites):
                states[:, site] = idx % geom.q
                idx //= geom.q
        else:
            states = data["states"]
        weights = data["weights"] if "weights" in data else None
    return SampleEnsemble(geom, states, weights)
