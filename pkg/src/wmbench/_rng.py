"""Pinned pseudo-random streams.

Every random draw in the toolkit goes through :func:`rng`, which builds a
``numpy.random.Generator`` on the PCG64 bit generator seeded through
``SeedSequence``. PCG64 output and the ziggurat normal sampler are
platform independent, so seeded runs are bit-reproducible.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for ``seed`` and an optional stream path (counters/tags)."""
    entropy = [int(seed) & MASK64, *[int(s) & MASK64 for s in stream]]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *stream: int) -> int:
    """Child 64-bit seed; stable under appending new streams."""
    ss = np.random.SeedSequence([int(seed) & MASK64, *[int(s) & MASK64 for s in stream]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def tag(name: str) -> int:
    """Stable integer for a string label (FNV-1a, 64-bit)."""
    h = 0xCBF29CE484222325
    for b in name.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h
