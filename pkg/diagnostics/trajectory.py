"""Entropy traces along an exactly evolved trajectory of measures."""
from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

from lattice.errors import BadValue, EntroflowError
from lattice.torus import box
from measure.exact import ExactMeasure, nonnullness, total_variation
from potential.potential import Potential
from dynamics.ips import evolve_schedule, generator_flow
from dynamics.pca import PcaKernel, pca_pushforward
from entropy.loss import (
    continuous_loss_direct,
    discrete_loss_decomposition,
    discrete_loss_gP,
    entropy_production_rep,
    pairing_L,
)
from entropy.relative import local_relative_entropy
from .gibbs import dlr_residual
from .martingale import martingale_diagnostic

logger = logging.getLogger(__name__)

COLUMNS = (
    "t",
    "volume",
    "h_density",
    "g_direct",
    "g_rep",
    "pairing",
    "delta",
    "dlr_residual",
    "martingale_diag",
    "tv_to_mu",
    "weak_step",
    "error",
)


@dataclass
class EntropyTrace:
    rows: List[Dict] = field(default_factory=list)
    tag: str = ""
    model: str = ""

    def column(self, name: str, volume: int | None = None) -> List:
        return [row[name] for row in self.rows if volume is None or row["volume"] == volume]

    def times(self) -> List[float]:
        return sorted({row["t"] for row in self.rows})

    def volumes(self) -> List[int]:
        return sorted({row["volume"] for row in self.rows})

    def final_rows(self) -> List[Dict]:
        last = max(self.times(), default=None)
        return [row for row in self.rows if row["t"] == last]

    def errors(self) -> List[Tuple[float, int, str]]:
        return [(row["t"], row["volume"], row["error"]) for row in self.rows if row["error"]]


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace_csv(trace: EntropyTrace, path: str) -> str:
    """CSV with floats written by repr, so identical runs give identical bytes."""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in trace.rows:
            writer.writerow([_cell(row[c]) for c in COLUMNS])
    return path


def evolve_trajectory(model, nu0: ExactMeasure, times: Sequence[float]) -> List[ExactMeasure]:
    """Exact measures at every grid time: PCA grids count steps, IPS grids are real times."""
    if isinstance(model, PcaKernel):
        out, current, step = [], nu0, 0
        for t in times:
            if float(t) != int(t) or int(t) < step:
                raise BadValue(f"PCA time grid must be nondecreasing integers, got {t}")
            while step < int(t):
                current = pca_pushforward(model, current)
                step += 1
            out.append(current)
        return out
    return evolve_schedule(model, nu0, times)


class _RowErrors:
    def __init__(self):
        self.messages: List[str] = []

    def run(self, name: str, fn: Callable[[], float]) -> float:
        try:
            return float(fn())
        except (EntroflowError, FloatingPointError, ValueError) as exc:
            self.messages.append(f"{name}: {type(exc).__name__}: {exc}")
            return math.nan


def _volume_sites(nu: ExactMeasure, entry) -> Tuple[int, ...]:
    if isinstance(entry, int):
        return box(nu.geometry, entry)
    return tuple(sorted(set(entry)))


def trajectory_report(model, nu0: ExactMeasure, mu: ExactMeasure, phi: Potential, times: Sequence[float],
                      volumes: Sequence, martingale_schedule: Sequence[int] = (0, 1),
                      measures: Sequence[ExactMeasure] | None = None) -> EntropyTrace:
    """One row per (time, volume). Torus-wide columns (delta, DLR residual, martingale,
    representation and pairing) repeat across volumes; failures land in the `error` column."""
    measures = list(measures) if measures is not None else evolve_trajectory(model, nu0, times)
    discrete = isinstance(model, PcaKernel)
    trace = EntropyTrace(tag=nu0.geometry.tag(), model=getattr(model, "name", ""))
    full = tuple(range(nu0.geometry.n_sites))
    previous = None
    for t, nu in zip(times, measures):
        torus = _RowErrors()
        delta = torus.run("delta", lambda: nonnullness(nu).delta)
        dlr = torus.run("dlr_residual", lambda: dlr_residual(nu, phi).max_residual)
        mart = torus.run("martingale_diag", lambda: martingale_diagnostic(nu, martingale_schedule).sup())
        if discrete:
            split = None
            try:
                split = discrete_loss_decomposition(model, nu, phi)
            except EntroflowError as exc:
                torus.messages.append(f"g_rep: {type(exc).__name__}: {exc}")
            rep = split.entropy_change if split else math.nan
            pair = split.energy_change if split else math.nan
            pushed = pca_pushforward(model, nu)
            flow = None
        else:
            rep = torus.run("g_rep", lambda: entropy_production_rep(nu, model))
            pair = torus.run("pairing", lambda: pairing_L(nu, phi, model))
            flow = generator_flow(model, nu)
        for entry in volumes:
            sites = _volume_sites(nu, entry)
            row_errors = _RowErrors()
            row_errors.messages.extend(torus.messages)
            h = local_relative_entropy(nu, mu, sites) / len(sites)
            if discrete:
                g = row_errors.run("g_direct", lambda: discrete_loss_gP(model, nu, mu, sites, pushed=pushed))
            else:
                g = row_errors.run("g_direct", lambda: continuous_loss_direct(model, nu, mu, sites, flow=flow))
            whole = sites == full
            row = {
                "t": float(t),
                "volume": len(sites),
                "h_density": float(h),
                "g_direct": g,
                "g_rep": rep if whole else math.nan,
                "pairing": pair if whole else math.nan,
                "delta": delta,
                "dlr_residual": dlr,
                "martingale_diag": mart,
                "tv_to_mu": total_variation(nu, mu, sites),
                "weak_step": total_variation(nu, previous, sites) if previous is not None else 0.0,
                "error": "; ".join(row_errors.messages),
            }
            if row["error"]:
                logger.warning(f"t={t!r} volume={len(sites)}: {row['error']}")
            trace.rows.append(row)
        logger.info(f"trace t={t!r}: h={trace.rows[-1]['h_density']!r} dlr={dlr!r}")
        previous = nu
    return trace


@dataclass(frozen=True)
class HolleyReport:
    consistent: bool
    checked: int
    violations: List[float]


def holley_check(trace: EntropyTrace, loss_threshold: float = 1e-12, dlr_threshold: float = 1e-4,
                 tv_threshold: float | None = None) -> HolleyReport:
    """Whenever |g_direct| on the whole torus is below `loss_threshold`, the DLR residual
    (and, if given, the distance to mu) must be below its threshold too.

    The loss is quadratic in the distance to equilibrium, the residual linear; the defaults are paired on that scale.
    """
    volume = max(trace.volumes(), default=0)
    violations, checked = [], 0
    for row in trace.rows:
        if row["volume"] != volume or not math.isfinite(row["g_direct"]):
            continue
        if abs(row["g_direct"]) < loss_threshold:
            checked += 1
            bad = not row["dlr_residual"] < dlr_threshold
            if tv_threshold is not None:
                bad = bad or not row["tv_to_mu"] < tv_threshold
            if bad:
                violations.append(row["t"])
    return HolleyReport(consistent=not violations, checked=checked, violations=violations)


def trace_summary(trace: EntropyTrace, dlr_threshold: float = 1e-6) -> Dict:
    """Convergence verdicts per criterion plus the witnesses of the last time point."""
    volume = max(trace.volumes(), default=0)
    h = [row["h_density"] for row in trace.rows if row["volume"] == volume]
    finals = [row for row in trace.final_rows() if row["volume"] == volume]
    last = finals[0] if finals else {}
    monotone = all(b <= a + 1e-8 for a, b in zip(h, h[1:]))
    dlr = last.get("dlr_residual", math.nan)
    return {
        "converged": {
            "h_density_monotone": bool(monotone),
            "dlr_residual": bool(dlr < dlr_threshold),
            "holley": holley_check(trace).consistent,
        },
        "final": {k: (v if not isinstance(v, float) or math.isfinite(v) else repr(v)) for k, v in last.items()},
        "rows": len(trace.rows),
        "errors": len(trace.errors()),
    }
