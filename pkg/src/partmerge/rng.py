"""Seed derivation. Every random stream is a PCG64 generator keyed by
(master seed, fixed label, index...), so results do not depend on scheduling."""

from __future__ import annotations

import numpy as np

PERMUTATION = 0x7065726D
RADII = 0x72616469
BLOCK = 0x626C6F63
TRIAL = 0x74726961
MODEL = 0x6D6F6465

_MASK64 = (1 << 64) - 1


def stream(seed: int, label: int, *index: int) -> np.random.Generator:
    words = [seed & _MASK64, label, *index]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(words)))


def derive_seed(seed: int, label: int, *index: int) -> int:
    """A 64-bit child seed, e.g. the per-trial seed of a Monte Carlo campaign."""
    lo, hi = np.random.SeedSequence([seed & _MASK64, label, *index]).generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)
