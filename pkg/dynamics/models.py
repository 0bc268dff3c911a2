"""Builtin dynamics: infinite-temperature flips, heat-bath Glauber, noisy majority PCA, sitewise jumps."""
from __future__ import annotations

import logging
from typing import Dict, Mapping

import numpy as np
from scipy.sparse.csgraph import connected_components

from lattice.errors import BadValue, UnknownModel
from lattice.torus import Shape, local_index
from measure.exact import local_states
from potential.potential import Potential, neighborhood
from .ips import IpsRates, RateTerm, ips_stationary
from .pca import (
    PcaKernel,
    copy_left_kernel,
    identity_kernel,
    noisy_majority_kernel,
    pca_stationary,
    uniform_kernel,
)

logger = logging.getLogger(__name__)

MODEL_NAMES = (
    "inf-temp-flip",
    "glauber",
    "pca-majority-eps",
    "site-jump-M",
    "pca-identity",
    "pca-uniform",
    "pca-copy-left",
    "custom",
)


def inf_temp_flip(d: int, q: int = 2, rate: float = 1.0) -> IpsRates:
    """Each site independently jumps to every other state at `rate`."""
    table = np.full((q, q), float(rate))
    np.fill_diagonal(table, 0.0)
    return IpsRates(d, q, (RateTerm(Shape.single(d), Shape.single(d), table),), "inf-temp-flip")


def site_jump(d: int, intensity) -> IpsRates:
    """Sitewise independent jumps a -> b at intensity[a][b]; the intensity graph must be irreducible."""
    matrix = np.asarray(intensity, dtype=np.float64)
    q = matrix.shape[0]
    if matrix.shape != (q, q) or q < 2:
        raise BadValue(f"intensity matrix must be square with q >= 2, got {matrix.shape}")
    off = matrix.copy()
    np.fill_diagonal(off, 0.0)
    if off.min() < 0:
        raise BadValue("off-diagonal intensities must be nonnegative")
    n_components, _ = connected_components(off > 0, directed=True, connection="strong")
    if n_components != 1:
        raise BadValue("intensity matrix is not irreducible")
    return IpsRates(d, q, (RateTerm(Shape.single(d), Shape.single(d), off),), "site-jump-M")


def local_energies(phi: Potential, support: Shape) -> np.ndarray:
    """Energy of the interaction sets containing the origin, shape (q**|S|, q):
    row = configuration on `support`, column = value written at the origin."""
    q, d = phi.q, phi.d
    digits = local_states(support.size, q).astype(np.int64)
    origin = support.index_of((0,) * d)
    out = np.zeros((digits.shape[0], q))
    for a in range(q):
        patched = digits.copy()
        patched[:, origin] = a
        for term in phi.terms:
            for shifted, _ in term.shape.anchored_translates():
                cols = [support.index_of(o) for o in shifted.offsets]
                out[:, a] += term.table[local_index(patched, cols, q)]
    return out


def glauber(phi: Potential, rate: float = 1.0) -> IpsRates:
    """Heat-bath rates c(eta, a) = rate * gamma_0(a | eta), the current state included."""
    support = neighborhood(phi)
    energy = local_energies(phi, support)
    weights = np.exp(-(energy - energy.min(axis=1, keepdims=True)))
    table = rate * weights / weights.sum(axis=1, keepdims=True)
    return IpsRates(phi.d, phi.q, (RateTerm(Shape.single(phi.d), support, table),), f"glauber[{phi.name}]")


def custom_rates(d: int, q: int, terms) -> IpsRates:
    built = []
    for term in terms:
        region = Shape.of(term["region"])
        support = Shape.of(term.get("support", term["region"]))
        table = np.asarray(term["table"], dtype=np.float64).reshape(q ** support.size, q ** region.size)
        built.append(RateTerm(region, support, table))
    return IpsRates(d, q, tuple(built), "custom")


def custom_kernel(d: int, q: int, entry: Mapping) -> PcaKernel:
    shape = Shape.of(entry["neighborhood"])
    table = np.asarray(entry["table"], dtype=np.float64).reshape(q ** shape.size, q)
    return PcaKernel(shape, table, q, "custom-pca")


def builtin_models(name: str, params: Mapping | None = None, d: int = 1, q: int = 2,
                   potential: Potential | None = None):
    """Build a PcaKernel or IpsRates by name."""
    params = dict(params or {})
    if name == "inf-temp-flip":
        return inf_temp_flip(d, q, float(params.get("rate", 1.0)))
    if name == "glauber":
        phi = params.get("potential", potential)
        if phi is None:
            raise BadValue("glauber dynamics need a potential")
        return glauber(phi, float(params.get("rate", 1.0)))
    if name == "pca-majority-eps":
        shape = Shape.of(params["neighborhood"]) if "neighborhood" in params else None
        return noisy_majority_kernel(d, q, float(params.get("eps", 0.1)), shape)
    if name == "site-jump-M":
        if "M" not in params:
            raise BadValue("site-jump-M needs an intensity matrix 'M'")
        return site_jump(d, params["M"])
    if name == "pca-identity":
        return identity_kernel(d, q)
    if name == "pca-uniform":
        return uniform_kernel(d, q)
    if name == "pca-copy-left":
        return copy_left_kernel(d, q)
    if name == "custom":
        if "kernel" in params:
            return custom_kernel(d, q, params["kernel"])
        return custom_rates(d, q, params.get("terms", []))
    raise UnknownModel(f"unknown model '{name}'; known: {', '.join(MODEL_NAMES)}")


def is_discrete(model) -> bool:
    return isinstance(model, PcaKernel)


def stationary_measure(model, geom):
    if is_discrete(model):
        return pca_stationary(model, geom)
    return ips_stationary(model, geom)


def describe(model) -> Dict:
    if is_discrete(model):
        return {"kind": "pca", "name": model.name, "neighborhood": [list(o) for o in model.neighborhood.offsets]}
    return {
        "kind": "ips",
        "name": model.name,
        "terms": [{"region": [list(o) for o in t.region.offsets], "support": [list(o) for o in t.support.offsets]}
                  for t in model.terms],
    }
