from __future__ import annotations

import time

import numpy as np
import pytest

from kernels import KernelSpec, kernel_gram
from linalg import (
    ConvergenceError,
    RankError,
    centering_matrix,
    inv_sqrt_psd,
    ordered_matmul,
    retained_eigen,
    round_robin_pairs,
    sym_eigen,
)


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2.0


def test_identity_top_two() -> None:
    eig = sym_eigen(np.eye(3), top_m=2)
    assert eig.values.tolist() == [1.0, 1.0]
    assert np.allclose(eig.vectors.T @ eig.vectors, np.eye(2), atol=1e-12)


def test_diagonal_gives_signed_basis() -> None:
    eig = sym_eigen(np.diag([1.0, 3.0, 2.0]))
    assert eig.values.tolist() == [3.0, 2.0, 1.0]
    assert np.array_equal(eig.vectors, np.eye(3)[:, [1, 2, 0]])


def test_random_reconstruction(rng: np.random.Generator) -> None:
    Q = _random_symmetric(rng, 6)
    eig = sym_eigen(Q)
    assert np.all(np.diff(eig.values) <= 0)
    assert np.max(np.abs(eig.vectors.T @ eig.vectors - np.eye(6))) <= 1e-8
    recon = eig.vectors @ np.diag(eig.values) @ eig.vectors.T
    assert np.max(np.abs(recon - Q)) <= 1e-6 * np.max(np.abs(Q))
    assert np.allclose(eig.values, np.linalg.eigvalsh(Q)[::-1], atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 5, 7, 31, 64])
def test_odd_and_even_sizes_reconstruct(n: int) -> None:
    rng = np.random.default_rng(n)
    Q = _random_symmetric(rng, n)
    eig = sym_eigen(Q)
    assert eig.vectors.shape == (n, n)
    recon = eig.vectors @ np.diag(eig.values) @ eig.vectors.T
    assert np.max(np.abs(recon - Q)) <= 1e-8 * max(1.0, np.max(np.abs(Q)))
    assert np.allclose(eig.values, np.linalg.eigvalsh(Q)[::-1], atol=1e-9)


def test_nearly_diagonal_input_converges_in_few_sweeps() -> None:
    # only a handful of live pairs per round
    Q = np.diag(np.arange(1.0, 41.0))
    Q[3, 17] = Q[17, 3] = 1e-3
    Q[8, 30] = Q[30, 8] = -2e-3
    eig = sym_eigen(Q)
    assert eig.sweeps <= 3
    assert np.allclose(eig.values, np.linalg.eigvalsh(Q)[::-1], atol=1e-12)


def test_landmark_sized_gram_is_fast(rng: np.random.Generator) -> None:
    points = list(rng.standard_normal((400, 8)))
    G = kernel_gram(KernelSpec.rbf(2.0), points)
    started = time.perf_counter()
    eig = sym_eigen(G)
    assert time.perf_counter() - started < 30.0
    assert np.allclose(eig.values, np.linalg.eigvalsh(G)[::-1], atol=1e-9)
    again = sym_eigen(G.copy())
    assert again.vectors.tobytes() == eig.vectors.tobytes()


def test_sign_rule_makes_largest_component_positive(rng: np.random.Generator) -> None:
    eig = sym_eigen(_random_symmetric(rng, 7))
    for col in eig.vectors.T:
        assert col[np.argmax(np.abs(col))] > 0


def test_sym_eigen_is_deterministic(rng: np.random.Generator) -> None:
    Q = _random_symmetric(rng, 9)
    a, b = sym_eigen(Q), sym_eigen(Q.copy())
    assert a.values.tobytes() == b.values.tobytes()
    assert a.vectors.tobytes() == b.vectors.tobytes()


def test_sym_eigen_input_errors() -> None:
    with pytest.raises(ValueError, match="non-square"):
        sym_eigen(np.ones((2, 3)))
    with pytest.raises(ValueError, match="not symmetric"):
        sym_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="non-finite"):
        sym_eigen(np.array([[np.nan]]))


def test_sweep_cap_raises(rng: np.random.Generator) -> None:
    with pytest.raises(ConvergenceError):
        sym_eigen(_random_symmetric(rng, 8), max_sweeps=1)


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_round_robin_covers_every_pair_once(n: int) -> None:
    seen = []
    for p, q in round_robin_pairs(n):
        touched = np.concatenate([p, q]).tolist()
        assert len(touched) == len(set(touched))
        seen.extend(zip(p.tolist(), q.tolist()))
    assert sorted(seen) == [(i, j) for i in range(n) for j in range(i + 1, n)]


def test_centering_matrix_small_cases() -> None:
    assert centering_matrix(1).tolist() == [[0.0]]
    assert centering_matrix(2).tolist() == [[0.5, -0.5], [-0.5, 0.5]]


def test_centering_matrix_properties() -> None:
    H = centering_matrix(6)
    assert np.allclose(H, H.T)
    assert np.allclose(H @ H, H)
    assert np.allclose(H @ np.ones(6), 0.0)


def test_inv_sqrt_of_scaled_identity() -> None:
    Q = 4.0 * np.eye(2)
    E = inv_sqrt_psd(Q)
    assert np.allclose(np.abs(E), 0.5 * np.eye(2)) or np.allclose(np.abs(E), 0.5 * np.eye(2)[::-1])
    assert np.allclose(E @ Q @ E.T, np.eye(2), atol=1e-12)


def test_inv_sqrt_drops_null_direction() -> None:
    E = inv_sqrt_psd(np.diag([1.0, 0.0]), eig_floor=1e-8)
    assert E.shape == (1, 2)
    assert np.allclose(E, [[1.0, 0.0]])


def test_rank_zero_matrix() -> None:
    with pytest.raises(RankError, match="rank-zero matrix"):
        inv_sqrt_psd(np.zeros((3, 3)))


def test_negative_eigenvalues_are_dropped() -> None:
    eig = retained_eigen(np.diag([2.0, -1.0, 0.5]))
    assert eig.values.tolist() == [2.0, 0.5]


def test_whitening_of_centered_gram(rng: np.random.Generator) -> None:
    points = list(rng.standard_normal((20, 4)))
    H = centering_matrix(20)
    C = H @ kernel_gram(KernelSpec.rbf(1.0), points) @ H
    C = (C + C.T) / 2.0
    E = inv_sqrt_psd(C)
    assert np.max(np.abs(E @ C @ E.T - np.eye(E.shape[0]))) <= 1e-6


def test_ordered_matmul_matches_numpy(rng: np.random.Generator) -> None:
    A, X = rng.standard_normal((4, 6)), rng.standard_normal((6, 3))
    assert np.allclose(ordered_matmul(A, X), A @ X, rtol=1e-13, atol=1e-13)
    with pytest.raises(ValueError, match="dimension mismatch"):
        ordered_matmul(A, X.T)


def test_ordered_matmul_ignores_zero_blocks_bitwise(rng: np.random.Generator) -> None:
    A1, A2 = rng.standard_normal((2, 3)), rng.standard_normal((3, 4))
    X = rng.standard_normal((7, 5))
    full = np.zeros((5, 7))
    full[:2, :3] = A1
    full[2:, 3:] = A2
    whole = ordered_matmul(full, X)
    assert whole[:2].tobytes() == ordered_matmul(A1, X[:3]).tobytes()
    assert whole[2:].tobytes() == ordered_matmul(A2, X[3:]).tobytes()
