"""
Coeffs - Learn landmarks and coefficients for the Nystrom and stable variants.

Both fitters sample landmarks with a map job (each instance kept with
probability l/n from its task's random stream, collected by a single
reducer) and then solve on the l x l landmark gram in one place.
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np

from dataio.records import PartitionedDataset
from engine import JobRunner, MrJob, TaskContext, job_id_for
from kernels import KernelSpec, kernel_gram
from linalg import (
    DEFAULT_EIG_FLOOR,
    centering_matrix,
    inv_sqrt_factor,
    ordered_matmul,
    retained_eigen,
)
from .model import ApncModel, Landmarks, SamplingError

DEFAULT_SAMPLE_RETRIES = 5
DEFAULT_T_FRACTION = 0.4


def default_t(l: int) -> int:
    return max(1, math.ceil(DEFAULT_T_FRACTION * l))


def _minimum_count(l: int, min_count: int) -> int:
    return max(math.ceil(0.5 * l), min_count, min(2, l))


def sample_landmarks(
    dataset: PartitionedDataset,
    l: int,
    seed: int,
    min_count: int = 1,
    retries: int = DEFAULT_SAMPLE_RETRIES,
    runner: JobRunner | None = None,
) -> tuple[Landmarks, dict[str, Any]]:
    """Bernoulli(l/n) sample, retried with seed+1, seed+2, ... while too small."""
    if dataset.n == 0:
        raise ValueError("cannot sample landmarks from an empty dataset")
    if not 1 <= l <= dataset.n:
        raise ValueError(f"l must be in [1, {dataset.n}], got {l}")
    runner = runner or JobRunner()
    probability = l / dataset.n
    needed = _minimum_count(l, min_count)

    def keep(ctx: TaskContext, key: int, features: Any):
        if ctx.rng.random() < probability:
            return [(0, (int(key), features))]
        return []

    def collect(key: int, values: list):
        return [(key, tuple(values))]

    realized = 0
    for attempt in range(retries + 1):
        job = MrJob(name="sample_landmarks", map_fn=keep, reduce_fn=collect, seed=seed + attempt)
        output = runner.run_job(job, dataset)
        picked = output.as_dict().get(0, [()])[0]
        realized = len(picked)
        if realized >= needed:
            ids = np.array([i for i, _ in picked], dtype=np.int64)
            features = tuple(f for _, f in picked)
            print(f"[coeffs] Sampled {realized} landmarks (target {l}, attempt {attempt + 1})")
            info = {
                "l_requested": l,
                "l_realized": realized,
                "sample_attempts": attempt + 1,
                "sample_seed": seed + attempt,
            }
            return Landmarks.single(ids, features), info
        print(f"[coeffs] Only {realized} landmarks sampled (need {needed}); resampling with seed {seed + attempt + 1}")

    raise SamplingError(
        f"landmark sampling realized {realized} < {needed} after {retries + 1} attempts"
    )


def _landmark_gram(kernel: KernelSpec, landmarks: Landmarks) -> np.ndarray:
    return kernel_gram(kernel, landmarks.blocks[0].stack)


def fit_nystrom(
    dataset: PartitionedDataset,
    kernel: KernelSpec,
    l: int,
    m: int,
    seed: int,
    eig_floor: float = DEFAULT_EIG_FLOOR,
    max_sweeps: int = 100,
    sample_retries: int = DEFAULT_SAMPLE_RETRIES,
    runner: JobRunner | None = None,
) -> ApncModel:
    """R = Lambda^-1/2 V^T over the top-m landmark-gram eigenpairs above the floor."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if m > l:
        raise ValueError(f"m={m} exceeds l={l}")
    landmarks, info = sample_landmarks(dataset, l, seed, min_count=m, retries=sample_retries, runner=runner)

    K_LL = _landmark_gram(kernel, landmarks)
    eig = retained_eigen(K_LL, eig_floor, top_m=m, max_sweeps=max_sweeps)
    R = inv_sqrt_factor(eig)
    if len(eig) < m:
        print(f"[coeffs] Eigenvalue floor kept {len(eig)} of {m} requested dimensions")

    metadata = {
        **info,
        "variant": "nystrom",
        "kernel": kernel.describe(),
        "m_requested": m,
        "m_effective": len(eig),
        "eig_floor": eig_floor,
        "jacobi_sweeps": eig.sweeps,
    }
    print(f"[coeffs] Nystrom model: l={landmarks.l_total}, m={len(eig)}")
    return ApncModel(
        variant="nystrom",
        landmarks=landmarks,
        blocks=(R,),
        kernel=kernel,
        discrepancy="l2",
        seed=seed,
        d_in=dataset.d_in,
        metadata=metadata,
    )


def fit_stable(
    dataset: PartitionedDataset,
    kernel: KernelSpec,
    l: int,
    m: int,
    t: int | None,
    seed: int,
    eig_floor: float = DEFAULT_EIG_FLOOR,
    max_sweeps: int = 100,
    sample_retries: int = DEFAULT_SAMPLE_RETRIES,
    runner: JobRunner | None = None,
) -> ApncModel:
    """Rows R_j = (1/sqrt t) * sum of t random rows of the whitening operator W = V E.

    E = Lambda^-1/2 V^T whitens the centered landmark gram H K H, so each row
    sums t whitened landmark directions.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if t is None:
        t = default_t(l)
    if not 1 <= t <= l:
        raise ValueError(f"t must be in [1, l={l}], got {t}")
    landmarks, info = sample_landmarks(dataset, l, seed, min_count=t, retries=sample_retries, runner=runner)
    l_real = landmarks.l_total

    K_LL = _landmark_gram(kernel, landmarks)
    H = centering_matrix(l_real)
    centered = ordered_matmul(ordered_matmul(H, K_LL), H)
    eig = retained_eigen(centered, eig_floor, max_sweeps=max_sweeps)
    E = inv_sqrt_factor(eig)
    W = ordered_matmul(eig.vectors, E)

    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(job_id_for("stable_rows"),)))
    )
    scale = 1.0 / math.sqrt(t)
    R = np.empty((m, l_real), dtype=np.float64)
    for j in range(m):
        rows = np.sort(rng.choice(l_real, size=t, replace=False))
        R[j] = np.sum(W[rows], axis=0) * scale

    metadata = {
        **info,
        "variant": "stable",
        "kernel": kernel.describe(),
        "m_requested": m,
        "m_effective": m,
        "t": t,
        "whitened_rank": len(eig),
        "eig_floor": eig_floor,
        "jacobi_sweeps": eig.sweeps,
        "row_scale": "1/sqrt(t)",
    }
    print(f"[coeffs] Stable model: l={l_real}, m={m}, t={t}, whitened rank {len(eig)}")
    return ApncModel(
        variant="stable",
        landmarks=landmarks,
        blocks=(R,),
        kernel=kernel,
        discrepancy="l1",
        seed=seed,
        d_in=dataset.d_in,
        metadata=metadata,
    )


def nystrom_error(
    dataset: PartitionedDataset,
    model: ApncModel,
    cap: int = 5000,
    runner: JobRunner | None = None,
) -> dict[str, float]:
    """Max-norm and Frobenius error of Y^T Y against the exact gram (small n only)."""
    from .embed import embed_all

    if dataset.n > cap:
        raise ValueError(f"n={dataset.n} exceeds the exact gram cap {cap}")
    Y, _ = embed_all(dataset, model, runner=runner)
    approx = Y.values @ Y.values.T
    exact = kernel_gram(model.kernel, dataset.features())
    diff = approx - exact
    return {
        "max_abs": float(np.max(np.abs(diff))),
        "frobenius": float(np.sqrt(np.sum(diff * diff))),
        "relative_frobenius": float(np.sqrt(np.sum(diff * diff)) / np.sqrt(np.sum(exact * exact))),
    }
