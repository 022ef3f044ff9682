"""
Eigen - Symmetric eigendecomposition by cyclic Jacobi, centering and whitening.

Rotations follow a round-robin ordering: each round rotates n/2 disjoint
(p, q) pairs at once, and one sweep of n-1 rounds visits every pair exactly
once. The matrix is kept in seat order, so a round rotates the top half of
the seats against the reversed bottom half as two slices, and it is re-seated
between rounds. The order is fixed, so identical input bytes give identical
output bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_TOLERANCE = 1e-10
OFF_DIAGONAL_TOLERANCE = 1e-12
DEFAULT_MAX_SWEEPS = 100
DEFAULT_EIG_FLOOR = 1e-10


class ConvergenceError(RuntimeError):
    """Jacobi sweeps did not reduce the off-diagonal mass below tolerance."""


class RankError(ValueError):
    """No eigenvalue survives the floor."""


@dataclass(frozen=True, eq=False)
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0

    def __len__(self) -> int:
        return int(self.values.size)


def check_finite(Q: np.ndarray, what: str = "matrix") -> np.ndarray:
    Q = np.asarray(Q, dtype=np.float64)
    if not np.all(np.isfinite(Q)):
        raise ValueError(f"{what} has non-finite entries")
    return Q


def _symmetrized(Q: np.ndarray) -> np.ndarray:
    Q = check_finite(Q)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValueError(f"non-square matrix: shape {Q.shape}")
    if Q.shape[0] == 0:
        raise ValueError("empty matrix")
    scale = max(1.0, float(np.max(np.abs(Q))))
    if float(np.max(np.abs(Q - Q.T))) > SYMMETRY_TOLERANCE * scale:
        raise ValueError("matrix is not symmetric")
    return (Q + Q.T) / 2.0


def _tournament_step(size: int) -> np.ndarray:
    """Position order for the next round: player 0 stays, the others move one seat."""
    return np.concatenate(([0, size - 1], np.arange(1, size - 1))).astype(np.int64)


def round_robin_pairs(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Rounds of disjoint (p, q) pairs, p < q, covering every pair once.

    Round r pairs seat i with seat size-1-i; sym_eigen visits the same rounds.
    """
    size = n + (n % 2)
    step = _tournament_step(size)
    players = np.arange(size)
    rounds = []
    for _ in range(size - 1):
        a, b = players[:size // 2], players[::-1][:size // 2]
        real = (a < n) & (b < n)
        rounds.append((np.minimum(a, b)[real], np.maximum(a, b)[real]))
        players = players[step]
    return rounds


def _off_norm(A: np.ndarray) -> float:
    off = A - np.diag(np.diag(A))
    return float(np.sqrt(np.sum(off * off)))


def _rotation(app: np.ndarray, aqq: np.ndarray, apq: np.ndarray, skip: float):
    active = np.abs(apq) > skip
    safe_apq = np.where(active, apq, 1.0)
    tau = (aqq - app) / (2.0 * safe_apq)
    sign = np.where(tau >= 0.0, 1.0, -1.0)
    t = np.where(active, sign / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
    c = 1.0 / np.sqrt(1.0 + t * t)
    return c, t * c, active


def _rotate(B: np.ndarray, V: np.ndarray, P, Q, c: np.ndarray, s: np.ndarray) -> None:
    """Rotate columns and rows P against Q; P and Q are slices or index arrays."""
    cols_p, cols_q = B[:, P], B[:, Q]
    new_p, new_q = cols_p * c - cols_q * s, cols_p * s + cols_q * c
    B[:, P], B[:, Q] = new_p, new_q

    rows_p, rows_q = B[P, :], B[Q, :]
    new_p, new_q = c[:, None] * rows_p - s[:, None] * rows_q, s[:, None] * rows_p + c[:, None] * rows_q
    B[P, :], B[Q, :] = new_p, new_q

    vp, vq = V[:, P], V[:, Q]
    new_p, new_q = vp * c - vq * s, vp * s + vq * c
    V[:, P], V[:, Q] = new_p, new_q


def _round(B: np.ndarray, V: np.ndarray, seats_p: np.ndarray, seats_q: np.ndarray, skip: float) -> None:
    half = seats_p.size
    c, s, active = _rotation(B[seats_p, seats_p], B[seats_q, seats_q], B[seats_p, seats_q], skip)
    count = int(np.count_nonzero(active))
    if count == 0:
        return
    if 4 * count < half:
        # few live pairs: touch only those
        P, Q = seats_p[active], seats_q[active]
        _rotate(B, V, P, Q, c[active], s[active])
        B[P, Q] = 0.0
        B[Q, P] = 0.0
        return
    size = B.shape[0]
    # seat i meets seat size-1-i, so both sides are contiguous slices
    _rotate(B, V, slice(0, half), slice(size - 1, half - 1, -1), c, s)
    B[seats_p, seats_q] = np.where(active, 0.0, B[seats_p, seats_q])
    B[seats_q, seats_p] = B[seats_p, seats_q]


def sym_eigen(
    Q: np.ndarray,
    top_m: int | None = None,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> EigenResult:
    """Leading eigenpairs by algebraic value, descending.

    Each eigenvector is signed so its largest-magnitude component is positive.
    """
    A = _symmetrized(Q)
    n = A.shape[0]
    if top_m is not None and not 1 <= top_m <= n:
        raise ValueError(f"top_m must be in [1, {n}], got {top_m}")

    # odd sizes get a zero seat; its rotations are always the identity
    size = n + (n % 2)
    B = np.zeros((size, size))
    B[:n, :n] = A
    V = np.zeros((n, size))
    V[:, :n] = np.eye(n)
    seats_p = np.arange(size // 2, dtype=np.int64)
    seats_q = size - 1 - seats_p
    step = _tournament_step(size)

    tolerance = OFF_DIAGONAL_TOLERANCE * float(np.sqrt(np.sum(A * A)))
    # entries at or below this cannot keep the off-diagonal norm above tolerance
    skip = tolerance / size
    sweeps = 0
    while _off_norm(B) > tolerance:
        if sweeps >= max_sweeps:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {_off_norm(B):.3e}, tolerance {tolerance:.3e})"
            )
        for _ in range(size - 1):
            _round(B, V, seats_p, seats_q, skip)
            B = B[np.ix_(step, step)]
            V = V[:, step]
        # size-1 steps bring every seat back to its own index
        sweeps += 1

    values = np.diag(B)[:n].copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = V[:, :n][:, order]

    lead = np.argmax(np.abs(vectors), axis=0)
    flip = vectors[lead, np.arange(n)] < 0.0
    vectors[:, flip] *= -1.0

    if top_m is not None:
        values, vectors = values[:top_m], vectors[:, :top_m]
    return EigenResult(values=values, vectors=np.ascontiguousarray(vectors), sweeps=sweeps)


def retained_eigen(
    Q: np.ndarray,
    eig_floor: float = DEFAULT_EIG_FLOOR,
    top_m: int | None = None,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> EigenResult:
    """Eigenpairs with lambda > eig_floor * lambda_max and lambda > 0, at most top_m of them.

    Negative eigenvalues of indefinite kernels are dropped like tiny ones.
    """
    full = sym_eigen(Q, max_sweeps=max_sweeps)
    lam_max = float(full.values[0])
    keep = (full.values > eig_floor * lam_max) & (full.values > 0.0)
    r = int(np.count_nonzero(keep))
    if lam_max <= 0.0 or r == 0:
        raise RankError("rank-zero matrix")
    if top_m is not None:
        r = min(r, top_m)
    # values are sorted, so the retained set is a prefix
    return EigenResult(
        values=full.values[:r].copy(),
        vectors=np.ascontiguousarray(full.vectors[:, :r]),
        sweeps=full.sweeps,
    )


def centering_matrix(l: int) -> np.ndarray:
    """H = I - (1/l) e e^T."""
    if l < 1:
        raise ValueError(f"centering matrix needs l >= 1, got {l}")
    return np.eye(l) - np.full((l, l), 1.0 / l)


def inv_sqrt_factor(eig: EigenResult) -> np.ndarray:
    """Lambda^-1/2 V^T for already-retained eigenpairs."""
    return (1.0 / np.sqrt(eig.values))[:, None] * eig.vectors.T


def inv_sqrt_psd(
    Q: np.ndarray,
    eig_floor: float = DEFAULT_EIG_FLOOR,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
) -> np.ndarray:
    """E = Lambda_+^-1/2 V^T over the eigenpairs above the floor, so E Q E^T = I_r."""
    return inv_sqrt_factor(retained_eigen(Q, eig_floor, max_sweeps=max_sweeps))
