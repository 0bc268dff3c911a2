"""
entroflow - relative entropy along lattice dynamics

Commands:
- run <cfg>      evolve one system exactly, write trace.csv, diagnostics.json, manifest.json
- sweep <cfg>    Cartesian parameter grid, aggregated into sweep.csv
- oracle <name>  closed-form and brute-force reference values
- list-models    builtin dynamics

Launch: python entroflow.py run configs/flip.json
"""
import sys
import os
import logging

PROJECT_ROOT = os.path.dirname(os.path.abspath(__file__))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from config import LOG_LEVEL
from harness.cli import main

logging.basicConfig(
    level=getattr(logging, LOG_LEVEL, logging.INFO),
    format='%(message)s'
)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\n[STOP] interrupted")
        sys.exit(130)
