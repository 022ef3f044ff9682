"""Bandwidth tuning for the rbf kernel."""

from __future__ import annotations

import math

import numpy as np

from dataio.records import PartitionedDataset
from .functions import FeatureStack, _raw


def self_tune_rbf(dataset: PartitionedDataset, sample_size: int, seed: int) -> float:
    """sigma = sqrt(mean over sampled pairs of |x - y|^2 / 2).

    Draws min(n, sample_size) distinct instances with a seeded generator and
    averages over every unordered pair among them.
    """
    if sample_size < 2:
        raise ValueError(f"sample_size must be >= 2, got {sample_size}")
    if dataset.n < 2:
        raise ValueError("degenerate bandwidth: need at least two instances")

    rng = np.random.Generator(np.random.Philox(seed))
    ids = np.sort(rng.choice(dataset.n, size=min(dataset.n, sample_size), replace=False))
    sample = [dataset.instance(int(i)).features for i in ids]

    total = 0.0
    pairs = 0
    for i in range(len(sample) - 1):
        # rows i+1.. against row i; the same pairs in the same order every run
        dists = _raw("rbf", FeatureStack(sample[i + 1:]), sample[i])
        total += float(np.sum(dists))
        pairs += dists.size

    mean_half = total / pairs / 2.0
    if mean_half <= 0.0:
        raise ValueError("degenerate bandwidth: all sampled points are identical")
    sigma = math.sqrt(mean_half)
    print(f"[kernels] Self-tuned rbf sigma={sigma:.6g} from {len(sample)} sampled instances")
    return sigma


def tuning_record(dataset: PartitionedDataset, sample_size: int, seed: int) -> dict:
    """How a self-tuned sigma was obtained, for model metadata and reports."""
    return {
        "sigma_source": "self_tune_rms",
        "self_tune_sample": min(dataset.n, int(sample_size)),
        "self_tune_seed": int(seed),
    }
