"""Synthetic data - Gaussian blobs with a fixed center separation."""

from __future__ import annotations

import math

import numpy as np
from sklearn.datasets import make_blobs

from dataio.records import LabelVector, PartitionedDataset


def blob_centers(k: int, d: int, separation: float, std: float) -> np.ndarray:
    """Centers on scaled basis vectors, every pair exactly separation * std apart."""
    if d < k:
        raise ValueError(f"blobs need d >= k, got d={d}, k={k}")
    return np.eye(k, d) * (separation * std / math.sqrt(2.0))


def make_blobs_dataset(
    n: int,
    d: int,
    k: int,
    separation: float = 6.0,
    std: float = 1.0,
    seed: int = 0,
    partition_count: int = 1,
    memory_budget_bytes: int | None = None,
) -> tuple[PartitionedDataset, LabelVector]:
    X, y = make_blobs(
        n_samples=n,
        n_features=d,
        centers=blob_centers(k, d, separation, std),
        cluster_std=std,
        shuffle=True,
        random_state=seed,
    )
    dataset = PartitionedDataset.from_array(X, partition_count, memory_budget_bytes)
    print(f"[data] Generated {n} blob instances (d={d}, k={k}, separation={separation} sigma)")
    return dataset, LabelVector(y)
