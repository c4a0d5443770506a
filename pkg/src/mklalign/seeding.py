"""Deterministic random-number plumbing.

All randomness flows through PCG64 generators built from explicit 64-bit
seeds. Independent units of work (trials, folds) get seeds derived by XOR
with their index, so results are reproducible regardless of scheduling.
"""

from __future__ import annotations

import numpy as np

GENERATOR_NAME = "pcg64"
_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, index: int) -> int:
    """Seed for the index-th unit of work under a base seed."""
    return (int(seed) ^ int(index)) & _MASK64


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))
