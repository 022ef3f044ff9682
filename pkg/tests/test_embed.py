from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from apnc import ApncModel, EmbeddingMatrix, LandmarkBlock, Landmarks, embed_all, embed_one, fit_nystrom
from dataio import PartitionedDataset
from engine import JobRunner
from kernels import KernelSpec, kernel_block
from linalg import ordered_matmul


def _block_model(X: np.ndarray, sizes: list[int], rows: list[int], rng: np.random.Generator,
                 kernel: KernelSpec) -> ApncModel:
    ids = rng.permutation(X.shape[0])[:sum(sizes)]
    blocks, coeffs, start = [], [], 0
    for size, r in zip(sizes, rows):
        chosen = np.sort(ids[start:start + size])
        blocks.append(LandmarkBlock(chosen, tuple(X[i] for i in chosen)))
        coeffs.append(rng.standard_normal((r, size)))
        start += size
    return ApncModel(
        variant="nystrom",
        landmarks=Landmarks(tuple(blocks)),
        blocks=tuple(coeffs),
        kernel=kernel,
        discrepancy="l2",
        seed=0,
        d_in=X.shape[1],
    )


def _whole_product(X: np.ndarray, model: ApncModel) -> np.ndarray:
    landmarks = model.landmarks.features()
    K = np.column_stack([kernel_block(model.kernel, landmarks, x) for x in X])
    return ordered_matmul(model.full_coefficients(), K).T


def test_single_block_is_one_product(small_points: np.ndarray, rng: np.random.Generator) -> None:
    model = _block_model(small_points, [6], [4], rng, KernelSpec.rbf(1.0))
    Y, _ = embed_all(PartitionedDataset.from_array(small_points, 3), model)
    assert Y.values.tobytes() == _whole_product(small_points, model).tobytes()


def test_identity_coefficients_give_dot_products(small_points: np.ndarray) -> None:
    landmarks = Landmarks.single(np.array([0, 1, 2]), tuple(small_points[:3]))
    model = ApncModel("nystrom", landmarks, (np.eye(3),), KernelSpec.linear(), "l2", 0, 3)
    Y, _ = embed_all(PartitionedDataset.from_array(small_points, 2), model)
    assert np.allclose(Y.values, small_points @ small_points[:3].T, rtol=1e-13, atol=1e-13)


def test_three_blocks_match_whole_matrix_bitwise(small_points: np.ndarray, rng: np.random.Generator) -> None:
    model = _block_model(small_points, [4, 5, 3], [2, 6, 3], rng, KernelSpec.polynomial(3, 1.0))
    dataset = PartitionedDataset.from_array(small_points, 5)
    Y, report = embed_all(dataset, model)
    assert Y.m == 11
    assert Y.values.tobytes() == _whole_product(small_points, model).tobytes()
    assert report.records_shuffled == 0 and report.bytes_shuffled == 0


def test_embedding_independent_of_parallelism(small_points: np.ndarray, rng: np.random.Generator) -> None:
    model = _block_model(small_points, [4, 4], [3, 3], rng, KernelSpec.rbf(0.8))
    dataset = PartitionedDataset.from_array(small_points, 4)
    a, ra = embed_all(dataset, model, runner=JobRunner(1))
    b, rb = embed_all(dataset, model, runner=JobRunner(8))
    assert a.values.tobytes() == b.values.tobytes()
    assert ra.to_json() == rb.to_json()


def test_embed_one_matches_embed_all(small_points: np.ndarray, rng: np.random.Generator) -> None:
    model = _block_model(small_points, [3, 4], [2, 5], rng, KernelSpec.rbf(1.1))
    Y, _ = embed_all(PartitionedDataset.from_array(small_points, 3), model)
    for i in (0, 17, 39):
        assert embed_one(small_points[i], model).tobytes() == Y.values[i].tobytes()


def test_zero_instance_linear_kernel_embeds_to_zero(small_points: np.ndarray, rng: np.random.Generator) -> None:
    model = _block_model(small_points, [5], [3], rng, KernelSpec.linear())
    assert np.array_equal(embed_one(np.zeros(3), model), np.zeros(3))


def test_embed_dimension_mismatch(small_points: np.ndarray, rng: np.random.Generator) -> None:
    model = _block_model(small_points, [5], [3], rng, KernelSpec.linear())
    with pytest.raises(ValueError, match="dimension mismatch"):
        embed_one(np.zeros(4), model)
    with pytest.raises(ValueError, match="dimension mismatch"):
        embed_all(PartitionedDataset.from_array(np.zeros((3, 4))), model)


def test_cluster_mean_embedding_is_linear(small_points: np.ndarray, rng: np.random.Generator) -> None:
    model = _block_model(small_points, [6], [4], rng, KernelSpec.rbf(1.0))
    members = [2, 5, 11, 30]
    mean_y = np.mean([embed_one(small_points[i], model) for i in members], axis=0)
    # y is linear in the kernel column, so the mean embedding equals R times the mean column
    landmarks = model.landmarks.features()
    mean_k = np.mean([kernel_block(model.kernel, landmarks, small_points[i]) for i in members], axis=0)
    assert np.allclose(mean_y, model.blocks[0] @ mean_k, rtol=1e-12, atol=1e-12)


def test_nystrom_self_embedding_recovers_diagonal(rng: np.random.Generator) -> None:
    X = rng.standard_normal((12, 4))
    kernel = KernelSpec.rbf(2.0)
    model = fit_nystrom(PartitionedDataset.from_array(X), kernel, l=12, m=12, seed=0)
    for i in range(12):
        y = embed_one(X[i], model)
        assert float(y @ y) == pytest.approx(1.0, abs=1e-6)


def test_nystrom_isometry(rng: np.random.Generator) -> None:
    X = rng.standard_normal((30, 2))
    dataset = PartitionedDataset.from_array(X, 3)
    model = fit_nystrom(dataset, KernelSpec.rbf(1.0), l=15, m=6, seed=1)
    Y, _ = embed_all(dataset, model)
    K_tilde = Y.values @ Y.values.T
    for i, j in [(0, 1), (4, 20), (7, 29)]:
        d2 = float(np.sum((Y.values[i] - Y.values[j]) ** 2))
        assert d2 == pytest.approx(K_tilde[i, i] - 2 * K_tilde[i, j] + K_tilde[j, j], abs=1e-6)


def test_embedding_matrix_file_round_trip(tmp_path: Path, rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((9, 4)), 3)
    Y.save(tmp_path / "y.apncy")
    loaded = EmbeddingMatrix.load(tmp_path / "y.apncy", 3)
    assert loaded.values.tobytes() == Y.values.tobytes()
    assert loaded.ranges == Y.ranges == ((0, 3), (3, 6), (6, 9))


def test_embedding_matrix_rejects_gaps() -> None:
    with pytest.raises(ValueError):
        EmbeddingMatrix(np.zeros((4, 2)), ((0, 2), (3, 4)))
