"""
Exact kernel k-means on a full gram matrix.

dist^2(i, c) = K_ii - (2/n_c) sum_{a in P_c} K_ia + (1/n_c^2) sum_{a,b in P_c} K_ab

Initialization, tie-breaking, empty-cluster repair and stopping follow the
same policy as the embedding clusterer. Centroids are member sets, so an
initial or re-seeded centroid is a singleton.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from apnc.cluster import Assignment
from apnc.policy import farthest, initial_ids, nearest
from dataio.records import Features, MemoryBudgetError
from kernels import KernelSpec, kernel_gram

DEFAULT_CAP = 5000
SYMMETRY_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    K: np.ndarray

    def __post_init__(self) -> None:
        K = np.ascontiguousarray(self.K, dtype=np.float64)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ValueError(f"kernel matrix must be square, got {K.shape}")
        scale = max(1.0, float(np.max(np.abs(K)))) if K.size else 1.0
        if K.size and float(np.max(np.abs(K - K.T))) > SYMMETRY_TOLERANCE * scale:
            raise ValueError("kernel matrix is not symmetric")
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return int(self.K.shape[0])


def kernel_matrix(spec: KernelSpec, instances: Sequence[Features], cap: int = DEFAULT_CAP) -> KernelMatrix:
    if len(instances) > cap:
        raise MemoryBudgetError(f"n={len(instances)} exceeds the exact kernel k-means cap {cap}")
    return KernelMatrix(kernel_gram(spec, instances))


def _distances(K: np.ndarray, diag: np.ndarray, members: list[np.ndarray]) -> np.ndarray:
    table = np.empty((K.shape[0], len(members)), dtype=np.float64)
    for c, idx in enumerate(members):
        n_c = idx.size
        cross = np.sum(K[:, idx], axis=1)
        # within-cluster term, once per cluster
        within = float(np.sum(K[np.ix_(idx, idx)]))
        table[:, c] = diag - (2.0 / n_c) * cross + within / (n_c * n_c)
    return table


def exact_kkm(
    K: KernelMatrix | np.ndarray,
    k: int,
    max_iters: int = 20,
    seed: int = 0,
    cap: int = DEFAULT_CAP,
    history: list | None = None,
) -> tuple[Assignment, list[dict]]:
    """Lloyd iterations in kernel space. Returns the final assignment and a per-iteration log."""
    if not isinstance(K, KernelMatrix):
        K = KernelMatrix(K)
    n = K.n
    if n > cap:
        raise MemoryBudgetError(f"n={n} exceeds the exact kernel k-means cap {cap}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    gram = K.K
    diag = np.diag(gram).copy()
    members = [np.array([i], dtype=np.int64) for i in initial_ids(n, k, seed)]
    ids = np.arange(n, dtype=np.int64)

    log: list[dict] = []
    previous: np.ndarray | None = None
    labels = np.zeros(n, dtype=np.int64)
    for iteration in range(1, max_iters + 1):
        table = _distances(gram, diag, members)
        labels = nearest(table)
        objective = float(np.sum(table[ids, labels]))
        moved = n if previous is None else int(np.count_nonzero(labels != previous))

        members = [np.flatnonzero(labels == c) for c in range(k)]
        empty = [c for c in range(k) if members[c].size == 0]
        if empty:
            updated = _distances(gram, diag, [m if m.size else np.array([0]) for m in members])
            own = np.sqrt(np.maximum(updated[ids, labels], 0.0))
            for c, p in zip(empty, farthest(own, ids, len(empty))):
                members[c] = np.array([ids[p]], dtype=np.int64)
                print(f"[oracle] Re-seeded empty cluster {c} from instance {ids[p]}")

        log.append({"iter": iteration, "objective": objective, "moved": moved, "empty_repairs": len(empty)})
        if history is not None:
            history.append(labels.copy())
        if previous is not None and moved == 0:
            break
        previous = labels

    print(f"[oracle] Exact kernel k-means: n={n}, k={k}, {len(log)} iteration(s), "
          f"objective={log[-1]['objective']:.6g}")
    return Assignment(labels), log
