"""JSON experiment configs: parsing, validation and object construction."""
from __future__ import annotations

import copy
import json
import logging
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping

import numpy as np

from lattice.errors import CapExceeded, ConfigError, EntroflowError
from lattice.torus import SpinConfig, TorusGeometry
from measure.exact import ExactMeasure
from potential.potential import Potential, gibbs_measure
from dynamics.models import builtin_models, is_discrete, stationary_measure

logger = logging.getLogger(__name__)

KNOWN_KEYS = {
    "geometry",
    "potential",
    "dynamics",
    "initial",
    "times",
    "volumes",
    "seed",
    "output",
    "reference",
    "monte_carlo",
    "martingale",
    "excel",
    "plot",
    "grid",
}
REQUIRED_KEYS = ("geometry", "dynamics", "initial", "times")
INITIAL_KINDS = ("point-mass", "product", "gibbs", "table", "random")
REFERENCES = ("gibbs", "uniform", "stationary")


@dataclass
class ExperimentConfig:
    geometry: TorusGeometry
    potential: Potential
    dynamics: Dict[str, Any]
    initial: Dict[str, Any]
    times: List[float]
    volumes: List[Any]
    seed: int | None = None
    output: str | None = None
    reference: str = "gibbs"
    chains: int = 0
    martingale: List[int] = field(default_factory=lambda: [0, 1])
    excel: bool = False
    plot: bool = False
    grid: Dict[str, List[Any]] = field(default_factory=dict)
    raw: Dict[str, Any] = field(default_factory=dict)

    @property
    def stochastic(self) -> bool:
        return self.chains > 0 or self.initial.get("kind") == "random"


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _float_list(value, name: str) -> List[float]:
    _require(isinstance(value, list), f"'{name}' must be a list")
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ConfigError(f"'{name}' must contain numbers")


def _geometry(data) -> TorusGeometry:
    _require(isinstance(data, Mapping), "'geometry' must be an object")
    try:
        return TorusGeometry.from_json(data)
    except (EntroflowError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad geometry: {exc}")


def _potential(data, geom: TorusGeometry) -> Potential:
    if data is None:
        return Potential.zero(geom.d, geom.q)
    _require(isinstance(data, Mapping), "'potential' must be an object")
    try:
        phi = Potential.from_json(data, geom)
        phi.require_fit(geom)
        return phi
    except (EntroflowError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad potential: {exc}")


def _volumes(value, geom: TorusGeometry) -> List[Any]:
    if value is None:
        return [list(range(geom.n_sites))]
    _require(isinstance(value, list) and value, "'volumes' must be a non-empty list")
    out = []
    for entry in value:
        if isinstance(entry, int):
            _require(1 <= entry <= min(geom.sides), f"box side {entry} does not fit on {geom.tag()}")
            out.append(entry)
        elif isinstance(entry, list) and entry:
            _require(all(isinstance(s, int) and 0 <= s < geom.n_sites for s in entry),
                     f"volume {entry} has sites outside 0..{geom.n_sites - 1}")
            out.append(sorted(set(entry)))
        else:
            raise ConfigError(f"volume entries are box sides or site lists, got {entry!r}")
    return out


def parse_config(data: Mapping, check_cap: bool = True) -> ExperimentConfig:
    """Validate a decoded config. Raises ConfigError, and CapExceeded when the torus is too large."""
    _require(isinstance(data, Mapping), "config must be a JSON object")
    unknown = sorted(set(data) - KNOWN_KEYS)
    _require(not unknown, f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in REQUIRED_KEYS if k not in data]
    _require(not missing, f"missing config keys: {', '.join(missing)}")

    geom = _geometry(data["geometry"])
    phi = _potential(data.get("potential"), geom)

    dynamics = data["dynamics"]
    _require(isinstance(dynamics, Mapping) and "kind" in dynamics, "'dynamics' needs a 'kind'")
    _require(isinstance(dynamics.get("params", {}), Mapping), "'dynamics.params' must be an object")

    initial = data["initial"]
    _require(isinstance(initial, Mapping) and initial.get("kind") in INITIAL_KINDS,
             f"'initial.kind' must be one of {', '.join(INITIAL_KINDS)}")

    times = _float_list(data["times"], "times")
    _require(all(t >= 0 for t in times), "times must be nonnegative")
    _require(all(b >= a for a, b in zip(times, times[1:])), "times must be nondecreasing")

    reference = data.get("reference", "gibbs")
    _require(reference in REFERENCES, f"'reference' must be one of {', '.join(REFERENCES)}")

    mc = data.get("monte_carlo") or {}
    _require(isinstance(mc, Mapping), "'monte_carlo' must be an object")
    chains = mc.get("chains", 0)
    _require(isinstance(chains, int) and chains >= 0, "'monte_carlo.chains' must be a nonnegative integer")
    _require(chains == 0 or initial.get("kind") == "point-mass", "Monte Carlo chains need a point-mass initial measure")

    seed = data.get("seed")
    _require(seed is None or (isinstance(seed, int) and seed >= 0), "'seed' must be a nonnegative integer")

    martingale = data.get("martingale", [0, 1])
    _require(isinstance(martingale, list) and all(isinstance(r, int) and r >= 0 for r in martingale),
             "'martingale' must be a list of radii")

    grid = data.get("grid") or {}
    _require(isinstance(grid, Mapping) and all(isinstance(v, list) for v in grid.values()),
             "'grid' must map dotted keys to lists")

    cfg = ExperimentConfig(
        geometry=geom,
        potential=phi,
        dynamics={"kind": dynamics["kind"], "params": dict(dynamics.get("params", {}))},
        initial=dict(initial),
        times=times,
        volumes=_volumes(data.get("volumes"), geom),
        seed=seed,
        output=data.get("output"),
        reference=reference,
        chains=chains,
        martingale=list(martingale),
        excel=bool(data.get("excel", False)),
        plot=bool(data.get("plot", False)),
        grid={k: list(v) for k, v in grid.items()},
        raw=copy.deepcopy(dict(data)),
    )
    _require(cfg.seed is not None or not cfg.stochastic, "a 'seed' is required for stochastic runs")
    if check_cap:
        geom.check_cap()
    return cfg


def read_config_json(path: str) -> Dict[str, Any]:
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    _require(isinstance(data, dict), "config must be a JSON object")
    return data


def set_dotted(data: Dict, key: str, value) -> None:
    """Assign `value` at a dotted path such as 'potential.beta', creating nothing but the last key."""
    parts = key.split(".")
    target = data
    for part in parts[:-1]:
        if not isinstance(target, dict) or part not in target:
            raise ConfigError(f"grid key '{key}' does not match the config")
        target = target[part]
    if not isinstance(target, dict):
        raise ConfigError(f"grid key '{key}' does not match the config")
    target[parts[-1]] = value


# construction


def build_model(cfg: ExperimentConfig):
    params = dict(cfg.dynamics["params"])
    if "potential" in params and isinstance(params["potential"], Mapping):
        params["potential"] = _potential(params["potential"], cfg.geometry)
    try:
        model = builtin_models(cfg.dynamics["kind"], params, cfg.geometry.d, cfg.geometry.q, cfg.potential)
    except CapExceeded:
        raise
    except (EntroflowError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad dynamics: {exc}")
    if is_discrete(model):
        model.neighborhood.require_fit(cfg.geometry, "PCA neighborhood")
        _require(all(float(t).is_integer() for t in cfg.times), "PCA time grids count steps and must be integers")
    else:
        model.require_fit(cfg.geometry)
    return model


def build_initial(cfg: ExperimentConfig) -> ExactMeasure:
    geom, entry = cfg.geometry, cfg.initial
    kind = entry["kind"]
    try:
        if kind == "point-mass":
            states = entry.get("config")
            cfg_states = tuple(states) if states is not None else (int(entry.get("value", 1)),) * geom.n_sites
            return ExactMeasure.point_mass(SpinConfig(geom, cfg_states))
        if kind == "product":
            if "law" in entry:
                return ExactMeasure.product(geom, entry["law"])
            return ExactMeasure.bernoulli(geom, float(entry.get("p", 0.5)))
        if kind == "gibbs":
            return gibbs_measure(_potential(entry.get("potential"), geom), geom)
        if kind == "table":
            return ExactMeasure.from_table(geom, entry["probs"])
        return ExactMeasure.random(geom, np.random.default_rng(cfg.seed), float(entry.get("alpha", 1.0)))
    except CapExceeded:
        raise
    except (EntroflowError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad initial measure: {exc}")


def initial_config(cfg: ExperimentConfig) -> SpinConfig:
    """The starting configuration of a point-mass initial measure (Monte Carlo chains)."""
    nu0 = build_initial(cfg)
    return SpinConfig(cfg.geometry, nu0.to_config(int(np.argmax(nu0.probs))))


def build_reference(cfg: ExperimentConfig, model) -> ExactMeasure:
    if cfg.reference == "uniform":
        return ExactMeasure.uniform(cfg.geometry)
    if cfg.reference == "stationary":
        return stationary_measure(model, cfg.geometry)
    return gibbs_measure(cfg.potential, cfg.geometry)
