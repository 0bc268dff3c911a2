"""Command-line surface: run, sweep, oracle, list-models."""
from __future__ import annotations

import argparse
import logging
from typing import List, Sequence

from lattice.errors import BadValue, EntroflowError
from dynamics.models import MODEL_NAMES
from reports.report_builder import ReportBuilder
from . import __version__
from .oracle import ORACLES, cmd_oracle
from .runner import EXIT_OK, SWEEP_COLUMNS, cmd_run, cmd_sweep, exit_code_for

logger = logging.getLogger(__name__)

EXIT_USAGE = 2


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="experiment config (JSON)")
    p.add_argument("--out", help="output directory (default: .runData/<tag>-<hash>)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--threads", type=int, help="worker threads (Monte Carlo chains, sweep runs)")
    p.add_argument("--excel", action="store_true", help="also write an .xlsx copy of the table")
    p.add_argument("--plot", action="store_true", help="also render a PNG chart")
    p.add_argument("--db", dest="db_path", help="run registry database path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entroflow", description="Relative entropy along lattice dynamics")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_options(sub.add_parser("run", help="evolve one configured system and write its entropy trace"))
    _add_run_options(sub.add_parser("sweep", help="run a parameter grid and aggregate final values"))

    oracle = sub.add_parser("oracle", help="print a reference value")
    oracle.add_argument("name", choices=sorted(ORACLES))
    oracle.add_argument("variant", nargs="?", help="e.g. ising1d, pointmass-vs-uniform")
    oracle.add_argument("--beta", type=float)
    oracle.add_argument("--h", type=float)
    oracle.add_argument("--length", type=int)
    oracle.add_argument("--t", type=float)
    oracle.add_argument("--rate", type=float)
    oracle.add_argument("--n", type=int)
    oracle.add_argument("--q", type=int)

    sub.add_parser("list-models", help="print the builtin dynamics names")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.command == "list-models":
        print(ReportBuilder.format_models(MODEL_NAMES))
        return EXIT_OK

    if args.command == "oracle":
        try:
            value = cmd_oracle(args.name, args.variant, beta=args.beta, h=args.h, length=args.length,
                               t=args.t, rate=args.rate, n=args.n, q=args.q)
        except BadValue as e:
            logger.error(str(e))
            return EXIT_USAGE
        except EntroflowError as e:
            code = exit_code_for(e)
            logger.error(f"oracle failed ({type(e).__name__}, exit {code}): {e}")
            return code
        label = " ".join(x for x in (args.name, args.variant) if x)
        print(ReportBuilder.format_oracle(label, value))
        return EXIT_OK

    options = dict(out=args.out, seed=args.seed, threads=args.threads, excel=args.excel, plot=args.plot,
                   db_path=args.db_path)
    if args.command == "run":
        code, result = cmd_run(args.config, **options)
        if result is not None:
            print(ReportBuilder.format_run_summary(result.summary, result.summary.get("out_dir", "")))
        return code

    code, rows = cmd_sweep(args.config, **options)
    keys: List[str] = [k for k in (rows[0] if rows else {}) if k != "run" and k not in SWEEP_COLUMNS]
    print(ReportBuilder.format_sweep(rows, keys))
    return code
