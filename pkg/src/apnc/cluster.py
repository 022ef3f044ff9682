"""
Cluster - Lloyd iterations over embeddings as map/reduce jobs.

Each map task assigns its instances to the nearest centroid under the
model's discrepancy and emits one (cluster, (Z_c, g_c)) record per cluster:
the sum and count of its members in that task. Reducers divide. Shuffle per
iteration is therefore map_tasks * k records of m + 1 floats, whatever n is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from engine import InputSplit, JobRunner, Mapper, MrJob, ShuffleReport, TaskContext
from .embed import EmbeddingMatrix
from .policy import best_restart, farthest, initial_ids, nearest, restart_seed

DISCREPANCY_TAGS = ("l2", "l1")


@dataclass(frozen=True, eq=False)
class CentroidSet:
    """k centroids; row c is centroid c."""

    values: np.ndarray
    iteration: int = 0

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1:
            raise ValueError("centroids must be a non-empty k x m array")
        if not np.all(np.isfinite(values)):
            raise ValueError("centroids have non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def k(self) -> int:
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True, eq=False)
class Assignment:
    labels: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", np.ascontiguousarray(self.labels, dtype=np.int64))

    def __len__(self) -> int:
        return int(self.labels.size)

    def counts(self, k: int) -> np.ndarray:
        return np.bincount(self.labels, minlength=k)


@dataclass(frozen=True, eq=False)
class LocalAggregate:
    """Per-task cluster sums Z (k x m) and counts g (k)."""

    Z: np.ndarray
    g: np.ndarray

    @classmethod
    def from_labels(cls, Y: np.ndarray, labels: np.ndarray, k: int) -> "LocalAggregate":
        Z = np.zeros((k, Y.shape[1]), dtype=np.float64)
        # unbuffered, in row order
        np.add.at(Z, labels, Y)
        g = np.bincount(labels, minlength=k).astype(np.float64)
        return cls(Z, g)


def _check_tag(tag: str) -> None:
    if tag not in DISCREPANCY_TAGS:
        raise ValueError(f"unknown discrepancy {tag!r}; expected one of {DISCREPANCY_TAGS}")


def discrepancy(y: np.ndarray, ybar: np.ndarray, tag: str) -> float:
    """l2: Euclidean norm of y - ybar; l1: sum of absolute differences."""
    _check_tag(tag)
    y = np.asarray(y, dtype=np.float64)
    ybar = np.asarray(ybar, dtype=np.float64)
    if y.shape != ybar.shape:
        raise ValueError(f"length mismatch: {y.shape} vs {ybar.shape}")
    diff = y - ybar
    if tag == "l2":
        return float(np.sqrt(np.sum(diff * diff)))
    return float(np.sum(np.abs(diff)))


def distance_table(Y: np.ndarray, centroids: np.ndarray, tag: str) -> np.ndarray:
    """n x k costs used for assignment: squared l2 distances, or l1 distances.

    Squaring does not change the argmin; the l2 objective sums these directly.
    """
    table = np.empty((Y.shape[0], centroids.shape[0]), dtype=np.float64)
    for c in range(centroids.shape[0]):
        diff = Y - centroids[c]
        if tag == "l2":
            table[:, c] = np.sum(diff * diff, axis=1)
        else:
            table[:, c] = np.sum(np.abs(diff), axis=1)
    return table


def init_centroids(Y: EmbeddingMatrix, k: int, seed: int) -> CentroidSet:
    ids = initial_ids(Y.n, k, seed)
    return CentroidSet(Y.values[ids].copy(), iteration=0)


class AssignMapper(Mapper):
    """Nearest-centroid assignment plus the task's local cluster sums."""

    def map_block(self, ctx: TaskContext, split: InputSplit) -> Iterable:
        C = ctx.side_data["centroids"]
        tag = ctx.side_data["discrepancy"]
        Yb = split.values
        k = C.shape[0]
        if len(split) == 0:
            ctx.local_output["labels"] = np.empty(0, dtype=np.int64)
            return [(c, (np.zeros(C.shape[1]), 0.0)) for c in range(k)]
        ctx.current_record = int(split.keys[0])

        table = distance_table(Yb, C, tag)
        labels = nearest(table)
        ctx.count("objective", float(np.sum(table[np.arange(labels.size), labels])))
        previous = split.columns.get("label")
        moved = labels.size if previous is None else int(np.count_nonzero(labels != previous))
        ctx.count("moved", moved)
        ctx.local_output["labels"] = labels

        agg = LocalAggregate.from_labels(Yb, labels, k)
        return [(c, (agg.Z[c], float(agg.g[c]))) for c in range(k)]


def _centroid_reduce(key: int, values: list):
    total = values[0][0].copy()
    count = values[0][1]
    for Z, g in values[1:]:
        total += Z
        count += g
    if count == 0:
        return [(key, (None, 0.0))]
    return [(key, (total / count, count))]


class RepairMapper(Mapper):
    """Each task proposes its instances farthest from their own updated centroid."""

    def map_block(self, ctx: TaskContext, split: InputSplit) -> Iterable:
        C = ctx.side_data["centroids"]
        tag = ctx.side_data["discrepancy"]
        count = ctx.side_data["count"]
        labels = split.columns["label"]
        if len(split) == 0:
            return []
        ctx.current_record = int(split.keys[0])
        diff = split.values - C[labels]
        if tag == "l2":
            dist = np.sqrt(np.sum(diff * diff, axis=1))
        else:
            dist = np.sum(np.abs(diff), axis=1)
        ids = np.asarray(split.keys, dtype=np.int64)
        return [
            (0, (float(dist[p]), int(ids[p]), split.values[p]))
            for p in farthest(dist, ids, count)
        ]


def _repair_reduce_for(count: int):
    def reduce(key: int, values: list):
        dist = np.array([v[0] for v in values])
        ids = np.array([v[1] for v in values], dtype=np.int64)
        return [(key, (int(ids[p]), values[p][2])) for p in farthest(dist, ids, count)]
    return reduce


def cluster_iterate(
    Y: EmbeddingMatrix,
    centroids: CentroidSet,
    discrepancy_tag: str,
    parallelism: int = 1,
    previous: np.ndarray | None = None,
    runner: JobRunner | None = None,
) -> tuple[CentroidSet, Assignment, ShuffleReport]:
    """One Lloyd step. The report's counters carry objective, moved and empty_repairs."""
    _check_tag(discrepancy_tag)
    if centroids.m != Y.m:
        raise ValueError(f"dimension mismatch: centroids m={centroids.m}, embeddings m={Y.m}")
    runner = runner or JobRunner(parallelism)
    k = centroids.k
    splits = Y.splits(previous)

    job = MrJob(
        name="cluster_assign",
        mapper=AssignMapper,
        reduce_fn=_centroid_reduce,
        side_data={"centroids": centroids.values, "discrepancy": discrepancy_tag},
        reduce_tasks=k,
    )
    output = runner.run_job(job, splits)
    labels = np.concatenate([local["labels"] for local in output.side_outputs]) if splits else np.empty(0, np.int64)

    updated = centroids.values.copy()
    empty = []
    for c, (mean, count) in output.items():
        if count == 0:
            empty.append(int(c))
        else:
            updated[int(c)] = mean

    reports = [output.report]
    if empty:
        repair = MrJob(
            name="cluster_repair",
            mapper=RepairMapper,
            reduce_fn=_repair_reduce_for(len(empty)),
            side_data={"centroids": updated, "discrepancy": discrepancy_tag, "count": len(empty)},
        )
        repaired = runner.run_job(repair, Y.splits(labels))
        reports.append(repaired.report)
        for c, (instance_id, y) in zip(sorted(empty), (v for _, v in repaired.items())):
            updated[c] = y
            print(f"[cluster] Re-seeded empty cluster {c} from instance {instance_id}")

    report = ShuffleReport.combined("cluster_iterate", reports)
    report.counters["empty_repairs"] = len(empty)
    report.counters.setdefault("objective", 0.0)
    report.counters.setdefault("moved", 0)
    return CentroidSet(updated, centroids.iteration + 1), Assignment(labels), report


def cluster_run(
    Y: EmbeddingMatrix,
    k: int,
    discrepancy_tag: str,
    max_iters: int = 20,
    seed: int = 0,
    parallelism: int = 1,
    runner: JobRunner | None = None,
    history: list | None = None,
) -> tuple[Assignment, CentroidSet, list[dict]]:
    """Iterate until max_iters or until an iteration moves no instance.

    If `history` is given, each iteration's labels are appended to it.
    """
    _check_tag(discrepancy_tag)
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    runner = runner or JobRunner(parallelism)
    centroids = init_centroids(Y, k, seed)

    log: list[dict] = []
    previous: np.ndarray | None = None
    assignment = Assignment(np.zeros(Y.n, dtype=np.int64))
    for iteration in range(1, max_iters + 1):
        centroids, assignment, report = cluster_iterate(
            Y, centroids, discrepancy_tag, previous=previous, runner=runner
        )
        entry = {
            "iter": iteration,
            "objective": float(report.counters["objective"]),
            "moved": int(report.counters["moved"]),
            "shuffle_bytes": report.bytes_shuffled,
            "records": report.records_shuffled,
            "empty_repairs": int(report.counters["empty_repairs"]),
        }
        log.append(entry)
        if history is not None:
            history.append(assignment.labels.copy())
        print(f"[cluster] iter {iteration}: objective={entry['objective']:.6g} "
              f"moved={entry['moved']} shuffle={entry['shuffle_bytes']}B")
        if previous is not None and entry["moved"] == 0:
            break
        previous = assignment.labels

    return assignment, centroids, log


def cluster_best_of(
    Y: EmbeddingMatrix,
    k: int,
    discrepancy_tag: str,
    restarts: int = 1,
    max_iters: int = 20,
    seed: int = 0,
    parallelism: int = 1,
    runner: JobRunner | None = None,
) -> tuple[Assignment, CentroidSet, list[dict], dict]:
    """Run cluster_run from `restarts` seeded inits and keep the lowest final objective.

    Restart 0 uses `seed` itself, so restarts=1 is exactly cluster_run. The
    summary lists every restart's seed and final objective plus the shuffle
    bytes of all restarts together.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    runner = runner or JobRunner(parallelism)
    runs = []
    for r in range(restarts):
        init_seed = restart_seed(seed, r)
        runs.append((init_seed, *cluster_run(Y, k, discrepancy_tag, max_iters, init_seed, runner=runner)))

    objectives = [log[-1]["objective"] for _, _, _, log in runs]
    chosen = best_restart(objectives)
    init_seed, assignment, centroids, log = runs[chosen]
    summary = {
        "restart": chosen,
        "init_seeds": [s for s, _, _, _ in runs],
        "objectives": objectives,
        "shuffle_bytes": sum(entry["shuffle_bytes"] for _, _, _, run_log in runs for entry in run_log),
    }
    if restarts > 1:
        print(f"[cluster] Kept restart {chosen} of {restarts} (objective={objectives[chosen]:.6g})")
    return assignment, centroids, log, summary
