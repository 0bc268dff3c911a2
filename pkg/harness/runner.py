"""`run` and `sweep` commands: compute in memory, then write outputs, manifest and registry entry."""
from __future__ import annotations

import copy
import csv
import itertools
import json
import logging
import math
import os
import sqlite3
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping

import numpy as np

from config import DEFAULT_THREADS, RUN_DIR
from lattice.errors import CapExceeded, ConfigError, EntroflowError
from measure.empirical import SampleEnsemble, estimate_marginal
from dynamics.kmc import run_chains
from dynamics.models import describe
from diagnostics.trajectory import (
    COLUMNS,
    EntropyTrace,
    evolve_trajectory,
    trace_summary,
    trajectory_report,
    write_trace_csv,
)
from db.db_manager import init_db, register_run
from Export2Excel.exporter import export_sweep_to_excel, export_trace_to_excel
from charts.chart_builder import create_sweep_chart, create_trace_chart, save_chart
from .experiment_config import (
    ExperimentConfig,
    build_initial,
    build_model,
    build_reference,
    initial_config,
    parse_config,
    read_config_json,
    set_dotted,
)
from .manifest import RunManifest, config_hash, write_manifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_NUMERIC = 4

SWEEP_COLUMNS = ("status", "exit_code", "h_density", "g_direct", "dlr_residual", "tv_to_mu",
                 "h_monotone", "errors", "error")
MC_Z_WARN = 3.0


@dataclass
class RunResult:
    config: ExperimentConfig
    trace: EntropyTrace
    summary: Dict[str, Any] = field(default_factory=dict)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, CapExceeded):
        return EXIT_CAP
    return EXIT_NUMERIC


def _jsonable(value):
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if isinstance(value, Mapping):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    return value


def apply_overrides(data: Dict, seed: int | None = None,
                    excel: bool | None = None, plot: bool | None = None) -> Dict:
    data = copy.deepcopy(data)
    if seed is not None:
        data["seed"] = seed
    if excel:
        data["excel"] = True
    if plot:
        data["plot"] = True
    return data


def monte_carlo_check(cfg: ExperimentConfig, model, measures, threads: int = 1) -> Dict[str, Any]:
    """Site-0 marginals of independent chains against the exact evolution, with z-scores."""
    sigma0 = initial_config(cfg)
    states = run_chains(model, sigma0, cfg.times, cfg.chains, cfg.seed, threads)
    rows, worst = [], 0.0
    for k, (t, nu) in enumerate(zip(cfg.times, measures)):
        estimate = estimate_marginal(SampleEnsemble(cfg.geometry, states[:, k, :]), [0])
        exact = nu.marginal([0]).probs
        sigma = np.sqrt(np.clip(exact * (1.0 - exact), 0.0, None) / cfg.chains)
        diff = estimate.probs - exact
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(sigma > 0, diff / np.where(sigma > 0, sigma, 1.0), np.where(diff == 0, 0.0, np.inf))
        top = float(np.max(np.abs(z)))
        if top > MC_Z_WARN:
            logger.warning(f"Monte Carlo site-0 marginal at t={t!r} is {top:.2f} sigma from the exact value")
        worst = max(worst, top)
        rows.append({"t": float(t), "estimate": estimate.probs.tolist(), "exact": exact.tolist(), "max_abs_z": top})
    return {"chains": cfg.chains, "site": 0, "rows": rows, "max_abs_z": worst}


def execute(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    """Everything a run computes; nothing is written here."""
    model = build_model(cfg)
    nu0 = build_initial(cfg)
    mu = build_reference(cfg, model)
    logger.info(f"run {describe(model)['name']} on {cfg.geometry.tag()}: {len(cfg.times)} times, "
                f"{len(cfg.volumes)} volumes")
    measures = evolve_trajectory(model, nu0, cfg.times)
    trace = trajectory_report(model, nu0, mu, cfg.potential, cfg.times, cfg.volumes,
                              martingale_schedule=cfg.martingale, measures=measures)
    summary = trace_summary(trace)
    summary["model"] = describe(model)["name"]
    summary["geometry"] = cfg.geometry.tag()
    summary["reference"] = cfg.reference
    if cfg.chains:
        summary["monte_carlo"] = monte_carlo_check(cfg, model, measures, threads)
    return RunResult(config=cfg, trace=trace, summary=summary)


def default_out_dir(cfg: ExperimentConfig) -> str:
    return os.path.join(RUN_DIR, f"{cfg.geometry.tag()}-{config_hash(cfg.raw)[:12]}")


def write_outputs(result: RunResult, out_dir: str) -> RunManifest:
    cfg = result.config
    manifest = RunManifest(config_hash=config_hash(cfg.raw), config=cfg.raw)
    os.makedirs(out_dir, exist_ok=True)

    trace_path = write_trace_csv(result.trace, os.path.join(out_dir, "trace.csv"))
    manifest.add_output(trace_path, out_dir)

    diag_path = os.path.join(out_dir, "diagnostics.json")
    with open(diag_path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(result.summary), f, indent=2, sort_keys=True)
    manifest.add_output(diag_path, out_dir)

    if cfg.excel:
        xlsx = export_trace_to_excel(result.trace.rows, COLUMNS, os.path.join(out_dir, "trace.xlsx"))
        manifest.add_output(xlsx, out_dir)
    if cfg.plot:
        title = f"{result.summary.get('model', '')} {cfg.geometry.tag()}"
        try:
            png = save_chart(create_trace_chart(result.trace.rows, title), os.path.join(out_dir, "trace.png"))
            manifest.add_output(png, out_dir)
        except (ValueError, RuntimeError) as e:
            logger.warning(f"trace chart skipped for {out_dir}: {e}")

    write_manifest(manifest, out_dir)
    logger.info(f"outputs written to {out_dir}")
    return manifest


def _register(manifest: RunManifest, cfg: ExperimentConfig, model_name: str, out_dir: str,
              command: str, db_path: str | None) -> None:
    record = {
        "config_hash": manifest.config_hash,
        "code_version": manifest.code_version,
        "command": command,
        "model": model_name,
        "geometry": cfg.geometry.tag(),
        "seed": cfg.seed,
        "out_dir": os.path.abspath(out_dir),
        "started_at": manifest.started_at,
        "finished_at": manifest.finished_at,
    }
    try:
        init_db(db_path)
        register_run(record, manifest.outputs, db_path)
    except sqlite3.Error as e:
        logger.warning(f"run registry unavailable: {e}")


def run_config(data: Mapping, out_dir: str | None = None, threads: int = 1, db_path: str | None = None,
               command: str = "run") -> RunResult:
    """Parse, compute, write. Exceptions propagate; no file is written unless the computation succeeded."""
    cfg = parse_config(data)
    result = execute(cfg, threads)
    target = out_dir or cfg.output or default_out_dir(cfg)
    manifest = write_outputs(result, target)
    result.summary["out_dir"] = target
    _register(manifest, cfg, result.summary["model"], target, command, db_path)
    return result


def cmd_run(config_path: str, out: str | None = None, seed: int | None = None, threads: int | None = None,
            excel: bool = False, plot: bool = False, db_path: str | None = None) -> tuple[int, RunResult | None]:
    try:
        data = apply_overrides(read_config_json(config_path), seed=seed, excel=excel, plot=plot)
        result = run_config(data, out_dir=out, threads=threads or DEFAULT_THREADS, db_path=db_path)
    except (EntroflowError, FloatingPointError, np.linalg.LinAlgError) as e:
        code = exit_code_for(e)
        logger.error(f"run failed ({type(e).__name__}, exit {code}): {e}")
        return code, None
    return EXIT_OK, result


# sweeps


def grid_points(grid: Mapping[str, List]) -> List[Dict[str, Any]]:
    """Cartesian product in key order; an empty grid (or any empty axis) has no points."""
    keys = list(grid)
    if not keys or any(len(grid[k]) == 0 for k in keys):
        return []
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _sweep_row(index: int, point: Dict[str, Any], result: RunResult | None, error: BaseException | None) -> Dict:
    row: Dict[str, Any] = {"run": index, **point}
    if error is not None:
        row.update(status="failed", exit_code=exit_code_for(error), error=f"{type(error).__name__}: {error}")
        return row
    final = result.summary.get("final", {})
    row.update(
        status="ok",
        exit_code=EXIT_OK,
        h_density=final.get("h_density"),
        g_direct=final.get("g_direct"),
        dlr_residual=final.get("dlr_residual"),
        tv_to_mu=final.get("tv_to_mu"),
        h_monotone=result.summary["converged"]["h_density_monotone"],
        errors=result.summary.get("errors", 0),
        error="",
    )
    return row


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, dict)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def write_sweep_csv(rows: List[Dict], keys: List[str], path: str) -> str:
    columns = ["run", *keys, *SWEEP_COLUMNS]
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return path


def cmd_sweep(config_path: str, out: str | None = None, seed: int | None = None, threads: int | None = None,
              excel: bool = False, plot: bool = False, db_path: str | None = None) -> tuple[int, List[Dict]]:
    try:
        base = apply_overrides(read_config_json(config_path), seed=seed, excel=excel, plot=plot)
        grid = base.pop("grid", None) or {}
        cfg = parse_config(base, check_cap=False)
        if not isinstance(grid, Mapping) or not all(isinstance(v, list) for v in grid.values()):
            raise ConfigError("'grid' must map dotted keys to lists")
        points = grid_points(grid)
        runs = []
        for point in points:
            data = copy.deepcopy(base)
            for key, value in point.items():
                set_dotted(data, key, value)
            runs.append(data)
    except EntroflowError as e:
        code = exit_code_for(e)
        logger.error(f"sweep rejected ({type(e).__name__}, exit {code}): {e}")
        return code, []

    root = out or cfg.output or os.path.join(RUN_DIR, f"sweep-{config_hash(base)[:12]}")
    keys = list(grid)

    def one(index: int) -> Dict:
        try:
            result = run_config(runs[index], out_dir=os.path.join(root, f"run_{index:03d}"),
                                db_path=db_path, command="sweep")
        except (EntroflowError, FloatingPointError, np.linalg.LinAlgError) as e:
            logger.warning(f"sweep run {index} {points[index]} failed: {e}")
            return _sweep_row(index, points[index], None, e)
        return _sweep_row(index, points[index], result, None)

    workers = max(1, threads or DEFAULT_THREADS)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(one, range(len(runs))))
    logger.info(f"sweep finished: {len(rows)} runs")

    os.makedirs(root, exist_ok=True)
    manifest = RunManifest(config_hash=config_hash(base), config={**base, "grid": grid})
    manifest.add_output(write_sweep_csv(rows, keys, os.path.join(root, "sweep.csv")), root)
    if cfg.excel:
        xlsx = export_sweep_to_excel(rows, ["run", *keys, *SWEEP_COLUMNS], os.path.join(root, "sweep.xlsx"))
        manifest.add_output(xlsx, root)
    if cfg.plot and keys:
        ok = [row for row in rows if row["status"] == "ok"]
        try:
            png = save_chart(create_sweep_chart(ok, keys[0]), os.path.join(root, "sweep.png"))
            manifest.add_output(png, root)
        except (ValueError, RuntimeError) as e:
            logger.warning(f"sweep chart skipped: {e}")
    write_manifest(manifest, root)

    if rows and not any(row["status"] == "ok" for row in rows):
        return rows[0]["exit_code"], rows
    return EXIT_OK, rows
