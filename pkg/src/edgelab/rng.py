"""Counter-based random streams with derivable substreams.

Every Monte Carlo trial draws from ``substream(base_seed, trial, ...)``, so a
trial's matrix depends only on the base seed and its index, never on
scheduling or thread count.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "seed_words"]

_MASK64 = (1 << 64) - 1


def substream(base_seed: int, *key: int) -> np.random.Generator:
    """Independent Philox stream addressed by ``(base_seed, *key)``."""
    ss = np.random.SeedSequence(entropy=int(base_seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def seed_words(base_seed: int, *key: int) -> tuple[int, int]:
    """Low/high 32-bit words of the 64-bit Philox key for a substream."""
    ss = np.random.SeedSequence(entropy=int(base_seed) & _MASK64, spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo), int(hi)
