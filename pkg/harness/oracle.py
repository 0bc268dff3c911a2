"""Brute-force and closed-form reference values for tiny systems."""
from __future__ import annotations

import inspect
import logging
import math
from typing import Callable, Dict

from lattice.errors import BadValue
from lattice.torus import SpinConfig, TorusGeometry
from measure.exact import ExactMeasure
from potential.potential import ising, log_partition, pressure
from potential.transfer_matrix import transfer_matrix_pressure
from entropy.relative import local_relative_entropy

logger = logging.getLogger(__name__)


def pressure_ising1d(beta: float = 1.0, h: float = 0.0, length: int | None = None) -> float:
    """Transfer-matrix pressure: infinite volume by default, the periodic chain of `length` otherwise."""
    return transfer_matrix_pressure(beta, h, length)


def pressure_ising1d_enumerated(beta: float = 1.0, h: float = 0.0, length: int = 6) -> float:
    geom = TorusGeometry.chain(length, 2)
    return pressure(ising(beta, h, 1), geom)


def partition_ising1d(beta: float = 1.0, h: float = 0.0, length: int = 6) -> float:
    """log Z of the periodic chain by enumeration."""
    geom = TorusGeometry.chain(length, 2)
    return log_partition(ising(beta, h, 1), geom)


def flip_marginal(t: float = 1.0, rate: float = 1.0) -> float:
    """P(site is still in its starting state) under independent flips at `rate`."""
    if t < 0:
        raise BadValue(f"t must be nonnegative, got {t}")
    return (1.0 + math.exp(-2.0 * rate * t)) / 2.0


def entropy_pointmass_vs_uniform(n: int = 4, q: int = 2) -> float:
    """h(delta | uniform) on n sites by direct summation; equals n log q."""
    geom = TorusGeometry.chain(n, q)
    nu = ExactMeasure.point_mass(SpinConfig.constant(geom, q - 1))
    return local_relative_entropy(nu, ExactMeasure.uniform(geom))


ORACLES: Dict[str, Dict[str, Callable[..., float]]] = {
    "pressure": {"ising1d": pressure_ising1d, "ising1d-enumerated": pressure_ising1d_enumerated},
    "partition": {"ising1d": partition_ising1d},
    "flip-marginal": {"": flip_marginal},
    "entropy": {"pointmass-vs-uniform": entropy_pointmass_vs_uniform},
}


def cmd_oracle(name: str, variant: str | None = None, **params) -> float:
    """Evaluate one oracle; keyword arguments the chosen function does not take are ignored."""
    family = ORACLES.get(name)
    if family is None:
        raise BadValue(f"unknown oracle '{name}'; known: {', '.join(ORACLES)}")
    key = variant if variant is not None else next(iter(family))
    fn = family.get(key)
    if fn is None:
        raise BadValue(f"unknown variant '{variant}' for oracle '{name}'; known: {', '.join(k for k in family if k)}")
    accepted = inspect.signature(fn).parameters
    kwargs = {k: v for k, v in params.items() if v is not None and k in accepted}
    value = float(fn(**kwargs))
    logger.debug(f"oracle {name} {key} {kwargs} -> {value!r}")
    return value
