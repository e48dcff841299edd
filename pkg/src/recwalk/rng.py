"""Deterministic counter-based random streams.

Every Monte Carlo routine draws from a Philox stream keyed by
(seed, lane, sample index).  Sample i always sees the same stream no
matter how the work is scheduled, so serial and parallel runs — and
reruns — produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Lanes separate logically independent draws made for the same sample index.
WALK_LANE = 0
SHIFT_LANE = 1
RETURN_LANE = 2

DEFAULT_SEED = 123456789


def stream(seed: int, index: int = 0, lane: int = 0) -> np.random.Generator:
    """Independent generator for one (seed, lane, sample-index) triple.

    Indices below 2**56 never collide across lanes.
    """
    key = ((lane << 56) ^ index) & _MASK64
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, key]))
