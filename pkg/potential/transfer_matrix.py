"""Transfer-matrix reference values for the one-dimensional Ising chain."""
from __future__ import annotations

import math

import numpy as np


def ising_transfer_matrix(beta: float, h: float = 0.0) -> np.ndarray:
    spins = np.array([-1.0, 1.0])
    return np.exp(beta * np.outer(spins, spins) + 0.5 * h * (spins[:, None] + spins[None, :]))


def transfer_matrix_pressure(beta: float, h: float = 0.0, length: int | None = None) -> float:
    """log(lambda_max) for the infinite chain, or log(tr T^L)/L for the periodic chain of length L."""
    eig = np.linalg.eigvalsh(ising_transfer_matrix(beta, h))
    top = float(eig[-1])
    if length is None:
        return math.log(top)
    ratio = float(eig[0]) / top
    return math.log(top) + math.log1p(ratio ** length) / length
