"""Seeded Gaussian noise streams and per-run seed derivation.

Per-run seeds are pinned as follows so that ensembles are reproducible across
machines and schedules: run ``i`` of an ensemble with master seed ``m`` uses

    seed_i = splitmix64_mix((m + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64)

i.e. the ``i``-th output of a SplitMix64 generator started at ``m``.  Each seed
initialises its own ``numpy.random.PCG64`` bit generator.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of run ``index`` in an ensemble driven by ``master_seed``."""
    if index < 0:
        raise ValueError("run index must be non-negative")
    return splitmix64_mix((master_seed & MASK64) + (index + 1) * GOLDEN_GAMMA)


def derive_seeds(master_seed: int, n: int, start: int = 0) -> list[int]:
    return [derive_seed(master_seed, i) for i in range(start, start + n)]


class NoiseSource:
    """Standard-normal deviate stream tied to a 64-bit seed.

    Single-owner and mutable: ``position`` counts the deviates handed out so far.
    Two sources with the same seed yield bit-identical streams.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self._gen = np.random.Generator(np.random.PCG64(self.seed))
        self.position = 0

    def normal(self) -> float:
        self.position += 1
        return float(self._gen.standard_normal())

    def normals(self, n: int) -> np.ndarray:
        self.position += n
        return self._gen.standard_normal(n)

    def __repr__(self) -> str:
        return f"NoiseSource(seed={self.seed}, position={self.position})"


def draw_block(sources: Sequence[NoiseSource], n_steps: int) -> np.ndarray:
    """Return an ``(len(sources), n_steps)`` array, row ``k`` drawn from ``sources[k]``."""
    out = np.empty((len(sources), n_steps))
    for k, src in enumerate(sources):
        out[k] = src.normals(n_steps)
    return out
