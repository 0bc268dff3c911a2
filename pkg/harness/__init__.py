"""Batch experiment runner: configs, runs, sweeps and reference oracles."""

__version__ = "1.0.0"
