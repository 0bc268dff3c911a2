"""Counter-based random streams: one independent stream per (experiment seed, chain id)."""
from __future__ import annotations

import numpy as np


def chain_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(chain_id)])))

