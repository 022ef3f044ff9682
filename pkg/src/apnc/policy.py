"""Policy - Initialization, tie-breaking and empty-cluster repair shared with the exact oracle."""

from __future__ import annotations

import numpy as np

from engine.job import job_id_for


def initial_ids(n: int, k: int, seed: int) -> np.ndarray:
    """k distinct instance ids, uniformly without replacement."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(job_id_for("init_centroids"),)))
    )
    return rng.choice(n, size=k, replace=False).astype(np.int64)


def nearest(distances: np.ndarray) -> np.ndarray:
    """Row-wise argmin over clusters; ties go to the lowest cluster index."""
    return np.argmin(distances, axis=1)


def farthest(distances: np.ndarray, ids: np.ndarray, count: int) -> np.ndarray:
    """Positions of the `count` entries ranked by (distance descending, id ascending)."""
    order = np.lexsort((ids, -distances))
    return order[:count]


def restart_seed(seed: int, restart: int) -> int:
    """Init seed for one restart; restart 0 keeps the caller's seed."""
    if restart == 0:
        return int(seed)
    sequence = np.random.SeedSequence(seed, spawn_key=(job_id_for("restart"), restart))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])


def best_restart(objectives: list[float]) -> int:
    """Index of the lowest final objective; ties go to the earliest restart."""
    return int(np.argmin(np.asarray(objectives, dtype=np.float64)))
