from __future__ import annotations

import math

import numpy as np
import pytest

from apnc import (
    CentroidSet,
    EmbeddingMatrix,
    best_restart,
    cluster_best_of,
    cluster_iterate,
    cluster_run,
    discrepancy,
    farthest,
    init_centroids,
    initial_ids,
    nearest,
    restart_seed,
)
from engine import JobRunner


def test_discrepancy_of_equal_vectors_is_zero() -> None:
    y = np.array([1.0, -2.0, 3.0])
    assert discrepancy(y, y.copy(), "l2") == 0.0
    assert discrepancy(y, y.copy(), "l1") == 0.0


def test_discrepancy_hand_values() -> None:
    assert discrepancy(np.array([1.0, 2.0]), np.zeros(2), "l2") == pytest.approx(math.sqrt(5.0))
    assert discrepancy(np.array([1.0, 2.0]), np.zeros(2), "l1") == 3.0


def test_discrepancy_matches_loop(rng: np.random.Generator) -> None:
    for _ in range(10):
        y, c = rng.standard_normal(10), rng.standard_normal(10)
        sq, ab = 0.0, 0.0
        for a, b in zip(y, c):
            sq += (a - b) ** 2
            ab += abs(a - b)
        assert discrepancy(y, c, "l2") == pytest.approx(math.sqrt(sq), abs=1e-12)
        assert discrepancy(y, c, "l1") == pytest.approx(ab, abs=1e-12)


def test_discrepancy_rejects_unknown_tag() -> None:
    with pytest.raises(ValueError, match="unknown discrepancy"):
        discrepancy(np.zeros(2), np.zeros(2), "cosine")


def test_init_with_k_equal_n_is_a_permutation(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((12, 3)), 2)
    C = init_centroids(Y, 12, seed=4)
    ids = initial_ids(12, 12, seed=4)
    assert sorted(ids.tolist()) == list(range(12))
    assert np.array_equal(C.values, Y.values[ids])


def test_init_is_seeded(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((50, 3)), 4)
    assert np.array_equal(init_centroids(Y, 5, 8).values, init_centroids(Y.repartition(1), 5, 8).values)


def test_init_rejects_bad_k(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((5, 2)))
    with pytest.raises(ValueError):
        init_centroids(Y, 0, seed=0)
    with pytest.raises(ValueError):
        init_centroids(Y, 6, seed=0)


def test_nearest_breaks_ties_low() -> None:
    assert nearest(np.array([[1.0, 1.0, 2.0], [3.0, 0.5, 0.5]])).tolist() == [0, 1]


def test_farthest_breaks_ties_by_id() -> None:
    dist = np.array([2.0, 5.0, 5.0, 1.0])
    ids = np.array([10, 7, 3, 4])
    assert farthest(dist, ids, 2).tolist() == [2, 1]


def test_single_cluster_centroid_is_global_mean(rng: np.random.Generator) -> None:
    values = rng.standard_normal((20, 4))
    Y = EmbeddingMatrix.from_array(values, 1)
    C, assignment, _ = cluster_iterate(Y, CentroidSet(values[:1].copy()), "l2")
    assert np.all(assignment.labels == 0)
    expected = values[0].copy()
    for row in values[1:]:
        expected = expected + row
    assert C.values[0].tobytes() == (expected / 20.0).tobytes()


def test_two_pairs_converge_to_pair_means() -> None:
    values = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]])
    Y = EmbeddingMatrix.from_array(values, 2)
    start = CentroidSet(np.array([[0.0, 0.0], [10.0, 10.0]]))
    C, assignment, _ = cluster_iterate(Y, start, "l2")
    assert assignment.labels.tolist() == [0, 0, 1, 1]
    assert np.array_equal(C.values, np.array([[0.0, 0.5], [10.0, 10.5]]))


@pytest.mark.parametrize("n", [100, 10000])
def test_records_per_iteration_do_not_depend_on_n(n: int, rng: np.random.Generator) -> None:
    k, m, tasks = 3, 10, 4
    Y = EmbeddingMatrix.from_array(rng.standard_normal((n, m)), tasks)
    _, _, report = cluster_iterate(Y, init_centroids(Y, k, 0), "l2")
    assert report.records_shuffled == tasks * k
    assert report.bytes_shuffled == tasks * k * (4 + 8 * (m + 1))
    assert report.reduce_tasks == k


def test_empty_cluster_is_reseeded_from_farthest_instance() -> None:
    values = np.array([[0.0], [1.0], [2.0], [9.0]])
    Y = EmbeddingMatrix.from_array(values, 2)
    # centroid 1 starts far from every instance and captures nothing
    start = CentroidSet(np.array([[0.0], [100.0]]))
    C, assignment, report = cluster_iterate(Y, start, "l2")
    assert assignment.labels.tolist() == [0, 0, 0, 0]
    assert report.counters["empty_repairs"] == 1
    # mean is 3.0; instance 3 (value 9) is farthest
    assert C.values.tolist() == [[3.0], [9.0]]
    assert report.records_shuffled > 2 * 2


def test_repair_ties_go_to_lowest_id() -> None:
    values = np.array([[-1.0], [1.0], [0.0]])
    Y = EmbeddingMatrix.from_array(values, 3)
    C, _, _ = cluster_iterate(Y, CentroidSet(np.array([[0.0], [50.0]])), "l1")
    assert C.values.tolist() == [[0.0], [-1.0]]


def test_iteration_is_parallelism_independent(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((300, 5)), 6)
    start = init_centroids(Y, 4, 1)
    a = cluster_iterate(Y, start, "l1", runner=JobRunner(1))
    b = cluster_iterate(Y, start, "l1", runner=JobRunner(8))
    assert a[0].values.tobytes() == b[0].values.tobytes()
    assert a[1].labels.tobytes() == b[1].labels.tobytes()
    assert a[2].to_json() == b[2].to_json()


def test_run_stops_when_nothing_moves() -> None:
    values = np.array([[0.0, 0.0], [0.0, 1.0], [10.0, 10.0], [10.0, 11.0]])
    Y = EmbeddingMatrix.from_array(values, 2)
    assignment, C, log = cluster_run(Y, 2, "l2", max_iters=20, seed=0)
    assert len(log) <= 3
    assert log[-1]["moved"] == 0
    assert sorted(map(tuple, C.values.tolist())) == [(0.0, 0.5), (10.0, 10.5)]
    assert assignment.labels[0] == assignment.labels[1] != assignment.labels[2] == assignment.labels[3]


def test_run_respects_max_iters(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((200, 3)), 4)
    _, _, log = cluster_run(Y, 8, "l1", max_iters=2, seed=3)
    assert [entry["iter"] for entry in log] == [1, 2]
    assert set(log[0]) == {"iter", "objective", "moved", "shuffle_bytes", "records", "empty_repairs"}
    assert log[0]["moved"] == 200


@pytest.mark.parametrize("seed", range(10))
def test_l2_objective_is_non_increasing(seed: int) -> None:
    rng = np.random.default_rng(seed)
    Y = EmbeddingMatrix.from_array(rng.standard_normal((150, 4)), 3)
    _, _, log = cluster_run(Y, 5, "l2", max_iters=20, seed=seed)
    objectives = [entry["objective"] for entry in log]
    for before, after in zip(objectives, objectives[1:]):
        assert after <= before + 1e-9


def test_assignment_invariant_to_scaling(rng: np.random.Generator) -> None:
    values = rng.standard_normal((80, 3))
    a, _, _ = cluster_run(EmbeddingMatrix.from_array(values, 2), 4, "l1", seed=2)
    b, _, _ = cluster_run(EmbeddingMatrix.from_array(values * 8.0, 2), 4, "l1", seed=2)
    assert np.array_equal(a.labels, b.labels)


def test_history_records_each_iteration(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((60, 2)), 2)
    history: list = []
    _, _, log = cluster_run(Y, 3, "l2", seed=0, history=history)
    assert len(history) == len(log)


def test_restart_zero_keeps_the_seed() -> None:
    assert restart_seed(13, 0) == 13
    seeds = [restart_seed(13, r) for r in range(1, 6)]
    assert seeds == [restart_seed(13, r) for r in range(1, 6)]
    assert len(set(seeds)) == 5
    assert seeds != [restart_seed(14, r) for r in range(1, 6)]


def test_best_restart_prefers_earliest_tie() -> None:
    assert best_restart([3.0, 1.0, 1.0, 2.0]) == 1
    assert best_restart([5.0]) == 0


def test_single_restart_equals_plain_run(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((80, 4)), 3)
    labels, centroids, log = cluster_run(Y, 4, "l1", max_iters=10, seed=6)
    best_labels, best_centroids, best_log, summary = cluster_best_of(Y, 4, "l1", restarts=1, max_iters=10, seed=6)
    assert np.array_equal(best_labels.labels, labels.labels)
    assert best_centroids.values.tobytes() == centroids.values.tobytes()
    assert best_log == log
    assert summary["restart"] == 0
    assert summary["shuffle_bytes"] == sum(entry["shuffle_bytes"] for entry in log)


def test_best_of_keeps_lowest_final_objective() -> None:
    # three tight groups, one far away: some inits split a tight group instead
    rng = np.random.default_rng(2)
    X = np.vstack([
        rng.normal((0.0, 0.0), 0.05, (30, 2)),
        rng.normal((1.0, 0.0), 0.05, (30, 2)),
        rng.normal((40.0, 0.0), 0.05, (30, 2)),
    ])
    Y = EmbeddingMatrix.from_array(X, 4)
    _, _, log, summary = cluster_best_of(Y, 3, "l2", restarts=8, max_iters=20, seed=0)
    assert len(summary["objectives"]) == 8
    assert summary["init_seeds"][0] == 0
    assert summary["objectives"][summary["restart"]] == min(summary["objectives"])
    assert log[-1]["objective"] == min(summary["objectives"])

    singles = []
    for s in summary["init_seeds"]:
        _, _, single_log = cluster_run(Y, 3, "l2", max_iters=20, seed=s)
        singles.append(single_log[-1]["objective"])
    assert singles == summary["objectives"]


def test_best_of_is_parallelism_independent(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((120, 3)), 6)
    one = cluster_best_of(Y, 5, "l2", restarts=3, seed=9, parallelism=1)
    four = cluster_best_of(Y, 5, "l2", restarts=3, seed=9, parallelism=4)
    assert one[0].labels.tobytes() == four[0].labels.tobytes()
    assert one[2] == four[2]
    assert one[3] == four[3]


def test_best_of_rejects_zero_restarts(rng: np.random.Generator) -> None:
    Y = EmbeddingMatrix.from_array(rng.standard_normal((10, 2)), 1)
    with pytest.raises(ValueError, match="restarts"):
        cluster_best_of(Y, 2, "l2", restarts=0)
