"""Deterministic random streams.

Every Monte Carlo routine draws from a numpy ``Generator`` backed by PCG64,
seeded through ``SeedSequence(entropy=seed, spawn_key=(stream,))``.  A
replicate ``r`` of a run with seed ``s`` always sees the same stream,
independent of how many other replicates exist or in which order they run.
"""

import numpy as np


def substream(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the ``stream``-th substream of ``seed``."""
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.PCG64(ss))


def normals(seed: int, stream: int, size) -> np.ndarray:
    return substream(seed, stream).standard_normal(size)


def normal_rows(seed: int, rows: int, cols: int, offset: int = 0) -> np.ndarray:
    """Stack ``rows`` independent standard normal vectors, row r from substream offset + r."""
    out = np.empty((rows, cols))
    for r in range(rows):
        out[r] = normals(seed, offset + r, cols)
    return out
