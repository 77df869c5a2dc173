"""Deterministic RNG construction and per-trial seed derivation.

Parallel trials must not share a generator; each trial's seed is derived
from (root_seed, trial_index) through a 64-bit mix so that streams are
independent and the batch result does not depend on execution order.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer; a bijective 64-bit mix."""
    x &= _MASK64
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    x = (x ^ (x >> 27)) * 0x94D049BB133111EB & _MASK64
    return x ^ (x >> 31)


def trial_seed(root_seed: int, trial_index: int) -> int:
    """Seed for one trial of a batch rooted at root_seed."""
    return splitmix64((root_seed + (trial_index + 1) * _GOLDEN) & _MASK64)


def make_rng(seed) -> np.random.Generator:
    """Generator from an integer seed; passes Generators through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
