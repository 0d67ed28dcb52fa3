"""Reproducible random streams.

Streams are Philox (counter-based) generators keyed by ``(seed, stream)``, so
block ``i`` of a Monte Carlo job draws the same numbers no matter how many
workers share the job.
"""

import numpy as np

DEFAULT_SEED = 20140101


def make_rng(seed: int = DEFAULT_SEED, stream: int = 0) -> np.random.Generator:
    """Generator for stream ``stream`` of ``seed``."""
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def split(seed: int, n_streams: int) -> list[np.random.Generator]:
    return [make_rng(seed, i) for i in range(n_streams)]
