"""Deterministic seed derivation.

Every random stream in the package is a ``numpy`` ``Generator`` built from
``SeedSequence([master_seed, *keys])``. Replicate ``k`` of a bootstrap with
seed ``s`` is therefore ``SeedSequence([s, k])`` regardless of the order or
process in which replicates are evaluated.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed, *keys: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("keys cannot be combined with an existing Generator")
        return seed
    if seed is None:
        return np.random.default_rng()
    seed = int(seed)
    if seed < 0 or any(int(k) < 0 for k in keys):
        raise ValueError("seeds and stream keys must be nonnegative integers")
    return np.random.default_rng(np.random.SeedSequence([seed, *map(int, keys)]))


def derive_seed(seed: int, *keys: int) -> int:
    """A 63-bit integer seed for sub-stream ``keys`` of ``seed``."""
    ss = np.random.SeedSequence([int(seed), *map(int, keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0]) >> 1
