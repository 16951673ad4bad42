"""Splittable random sources.

Every random stream is derived from one 64-bit scenario seed plus a spawn
key ``(block, role)``.  Replicates are simulated in fixed-size blocks, so a
block's stream depends only on the seed and its index, never on how many
workers ran or in which order blocks finished.
"""
from __future__ import annotations

from enum import IntEnum

import numpy as np

BLOCK_SIZE = 4096


class Role(IntEnum):
    SIMULATE = 0
    START = 1
    BOOTSTRAP = 2
    ACCEPT = 3
    PROBE = 4


def make_rng(seed: int, block: int = 0, role: Role | int = Role.SIMULATE) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=(int(block), int(role)))
    return np.random.Generator(np.random.PCG64(ss))


def as_rng(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def blocks(m: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """Split ``m`` replicates into ``(block_index, start, stop)`` triples."""
    return [(b, lo, min(lo + block_size, m)) for b, lo in enumerate(range(0, m, block_size))]
