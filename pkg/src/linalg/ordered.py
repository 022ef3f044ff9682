"""Fixed-order products.

Sums run over the inner index sequentially, so zero blocks in a block-diagonal
operand leave results bit-for-bit equal to the per-block product.
"""

from __future__ import annotations

import numpy as np


def ordered_matmul(A: np.ndarray, X: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if A.ndim != 2 or X.ndim != 2 or A.shape[1] != X.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} @ {X.shape}")
    if A.shape[1] == 0:
        return np.zeros((A.shape[0], X.shape[1]))
    acc = A[:, 0:1] * X[0:1, :]
    for j in range(1, A.shape[1]):
        acc += A[:, j:j + 1] * X[j:j + 1, :]
    return acc


def ordered_matvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    return ordered_matmul(A, np.asarray(x, dtype=np.float64).reshape(-1, 1))[:, 0]
