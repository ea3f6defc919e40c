"""Reproducible per-trajectory random streams.

Trajectory ``t`` of a run with seed ``s`` draws from a Philox counter-based
generator keyed by ``SeedSequence(s, spawn_key=(t,))``. The stream of a
trajectory therefore depends only on ``(s, t)``, never on how trajectories are
split across workers.
"""

from __future__ import annotations

import numpy as np


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def chunk_ranges(total: int, chunks: int) -> list[tuple[int, int]]:
    """Split ``range(total)`` into at most ``chunks`` contiguous pieces."""
    chunks = max(1, min(int(chunks), total))
    edges = np.linspace(0, total, chunks + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
