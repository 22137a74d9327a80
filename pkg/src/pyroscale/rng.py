"""Reproducible random substreams.

Every random quantity is drawn from a Philox generator keyed by
``(master seed, replica id, stream kind)``.  Philox is counter based, so
substreams are independent and the result of a replica never depends on
how an ensemble is split across workers.
"""

from __future__ import annotations

import numpy as np

# stream kinds
SEEDS = 1
MATCHES = 2
MARKS = 3
HEIGHTS = 4
CLOUD = 5
THETA = 6
STATS = 7


def substream(master: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    """Accept a Generator, an integer seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return substream(0 if rng is None else int(rng))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit integer usable as the master seed of a nested object."""
    return int(rng.integers(0, 2**63 - 1))
