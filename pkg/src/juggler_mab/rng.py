"""Seeded, splittable random streams.

Every stochastic decision draws from a stream keyed by (seed, purpose,
day, sequence number), so results do not depend on evaluation order or on
how work is split across threads.
"""

from __future__ import annotations

import numpy as np

SIMULATION = 0
DATAGEN = 1


def substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def search_stream(seed: int, day_index: int, seq: int) -> np.random.Generator:
    """Stream owned by the ``seq``-th search of ``day_index`` in a replay."""
    return substream(seed, SIMULATION, day_index, seq)
