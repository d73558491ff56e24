"""Counter-derived seeding for reproducible parallel Monte Carlo.

Every replicate draws its generator from (master_seed, *indices) only, never
from wall clock or worker identity, so results are independent of thread or
process scheduling.
"""

from __future__ import annotations

import numpy as np


def child_sequence(master_seed: int, *indices: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((int(master_seed),) + tuple(int(i) for i in indices))


def rng_for(master_seed: int, *indices: int) -> np.random.Generator:
    """Generator keyed by the master seed and a replicate/stream counter."""
    return np.random.default_rng(child_sequence(master_seed, *indices))


def as_rng(seed) -> np.random.Generator:
    """Accept an int seed, a SeedSequence, a Generator, or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
