"""Kinetic Monte Carlo: Gillespie paths of an IPS and sampled PCA chains."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from lattice.errors import BadValue
from lattice.torus import SpinConfig, TorusGeometry, local_digits
from .ips import IpsRates
from .pca import PcaKernel, pca_step_states
from .rng import chain_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-constant path stored as an event log.

    Event k happens at times[k]: rate term terms[k] anchored at anchors[k] writes
    values[k, :|D|] onto its region (unused columns hold -1).
    """

    geometry: TorusGeometry
    rates: IpsRates
    initial: np.ndarray
    times: np.ndarray
    terms: np.ndarray
    anchors: np.ndarray
    values: np.ndarray
    horizon: float

    @property
    def n_jumps(self) -> int:
        return int(self.times.size)

    def state_at(self, t: float) -> np.ndarray:
        state = self.initial.copy()
        for k in range(int(np.searchsorted(self.times, t, side="right"))):
            term = self.rates.terms[self.terms[k]]
            for site, value in zip(term.region.sites(self.geometry, int(self.anchors[k])), self.values[k]):
                state[site] = value
        return state

    def final(self) -> SpinConfig:
        return SpinConfig(self.geometry, tuple(int(v) for v in self.state_at(self.horizon)))


class _Tables:
    """Per-term site arrays of every anchor, precomputed for a geometry."""

    def __init__(self, rates: IpsRates, geom: TorusGeometry):
        rates.require_fit(geom)
        self.region_sites = [np.array([t.region.sites(geom, i) for i in range(geom.n_sites)]) for t in rates.terms]
        self.support_sites = [np.array([t.support.sites(geom, i) for i in range(geom.n_sites)]) for t in rates.terms]
        self.support_powers = [geom.q ** np.arange(t.support.size) for t in rates.terms]
        self.region_powers = [geom.q ** np.arange(t.region.size) for t in rates.terms]


def _event_rates(rates: IpsRates, tables: _Tables, state: np.ndarray) -> List[np.ndarray]:
    out = []
    for k, term in enumerate(rates.terms):
        x = state[tables.support_sites[k]] @ tables.support_powers[k]
        current = state[tables.region_sites[k]] @ tables.region_powers[k]
        block = term.table[x].copy()
        block[np.arange(block.shape[0]), current] = 0.0
        out.append(block)
    return out


def gillespie_run(rates: IpsRates, sigma0: SpinConfig, horizon: float, rng: np.random.Generator) -> Trajectory:
    """Exact continuous-time path on [0, horizon]: exponential holding times, jumps chosen proportionally to rates."""
    if horizon < 0:
        raise BadValue(f"horizon must be nonnegative, got {horizon}")
    geom = sigma0.geometry
    tables = _Tables(rates, geom)
    width = max((t.region.size for t in rates.terms), default=1)
    state = sigma0.array()
    times, terms, anchors, values = [], [], [], []
    clock = 0.0
    while True:
        blocks = _event_rates(rates, tables, state)
        flat = np.concatenate([b.reshape(-1) for b in blocks]) if blocks else np.zeros(0)
        total = float(flat.sum())
        if total <= 0:
            break
        clock += rng.exponential(1.0 / total)
        if clock > horizon:
            break
        pick = int(np.searchsorted(np.cumsum(flat), rng.random() * total, side="right"))
        pick = min(pick, flat.size - 1)
        for k, block in enumerate(blocks):
            if pick < block.size:
                anchor, zeta = divmod(pick, block.shape[1])
                break
            pick -= block.size
        digits = local_digits(zeta, rates.terms[k].region.size, geom.q)
        state[tables.region_sites[k][anchor]] = digits
        times.append(clock)
        terms.append(k)
        anchors.append(anchor)
        values.append(list(digits) + [-1] * (width - len(digits)))
    return Trajectory(
        geometry=geom,
        rates=rates,
        initial=sigma0.array(),
        times=np.asarray(times, dtype=np.float64),
        terms=np.asarray(terms, dtype=np.int64),
        anchors=np.asarray(anchors, dtype=np.int64),
        values=np.asarray(values, dtype=np.int64).reshape(-1, width),
        horizon=float(horizon),
    )


def _ips_chain(rates: IpsRates, sigma0: SpinConfig, times: Sequence[float], seed: int, chain_id: int) -> np.ndarray:
    if not len(times):
        return np.zeros((0, sigma0.geometry.n_sites), dtype=np.int64)
    path = gillespie_run(rates, sigma0, max(times), chain_rng(seed, chain_id))
    return np.stack([path.state_at(t) for t in times])


def _pca_chain(kernel: PcaKernel, sigma0: SpinConfig, times: Sequence[int], seed: int, chain_id: int) -> np.ndarray:
    rng = chain_rng(seed, chain_id)
    geom = sigma0.geometry
    state = sigma0.array()[None, :].astype(np.uint8)
    out, step = [], 0
    for t in times:
        while step < int(t):
            state = pca_step_states(kernel, geom, state, rng)
            step += 1
        out.append(state[0].astype(np.int64))
    return np.stack(out) if out else np.zeros((0, geom.n_sites))


def run_chains(model, sigma0: SpinConfig, times: Sequence[float], n_chains: int, seed: int,
               threads: int = 1) -> np.ndarray:
    """States of `n_chains` independent chains at each grid time, shape (chains, times, sites).

    Chain k always draws from the stream (seed, k), so results do not depend on `threads`.
    """
    worker = _pca_chain if isinstance(model, PcaKernel) else _ips_chain
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = [pool.submit(worker, model, sigma0, list(times), seed, k) for k in range(n_chains)]
        results = [f.result() for f in futures]
    logger.info(f"{n_chains} chains of {getattr(model, 'name', 'model')} finished")
    return np.stack(results) if results else np.zeros((0, len(times), sigma0.geometry.n_sites))


def save_trajectory(path: Trajectory, filename: str) -> str:
    folder = os.path.dirname(filename)
    if folder:
        os.makedirs(folder, exist_ok=True)
    geom = path.geometry
    np.savez_compressed(
        filename,
        d=geom.d, sides=np.asarray(geom.sides), q=geom.q,
        initial=path.initial, times=path.times, terms=path.terms,
        anchors=path.anchors, values=path.values, horizon=path.horizon,
    )
    return filename


def load_trajectory(filename: str, rates: IpsRates) -> Trajectory:
    with np.load(filename) as data:
        geom = TorusGeometry(int(data["d"]), tuple(int(s) for s in data["sides"]), int(data["q"]))
        return Trajectory(
            geometry=geom, rates=rates, initial=data["initial"], times=data["times"],
            terms=data["terms"], anchors=data["anchors"], values=data["values"],
            horizon=float(data["horizon"]),
        )
