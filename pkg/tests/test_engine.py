from __future__ import annotations

import numpy as np
import pytest

from dataio import PartitionedDataset, SparseVector
from engine import (
    InputSplit,
    JobError,
    JobRunner,
    Mapper,
    MrJob,
    ShuffleReport,
    key_nbytes,
    payload_nbytes,
    run_chain,
    run_job,
    task_rng,
)

DOCUMENTS = [
    [1, 2, 2, 3],
    [3, 3, 1],
    [2, 4],
    [4, 4, 4, 1, 2],
    [5],
]


def _word_splits() -> list[InputSplit]:
    return [
        InputSplit(index=0, keys=[0, 1, 2], values=DOCUMENTS[:3]),
        InputSplit(index=1, keys=[3, 4], values=DOCUMENTS[3:]),
    ]


def _count_words(ctx, key, words):
    return [(w, 1) for w in words]


def _sum_counts(key, values):
    return [(key, sum(values))]


def test_word_count_is_parallelism_independent() -> None:
    job = MrJob(name="word_count", map_fn=_count_words, reduce_fn=_sum_counts, reduce_tasks=2)
    out1, rep1 = run_job(job, _word_splits(), parallelism=1)
    out4, rep4 = run_job(job, _word_splits(), parallelism=4)
    assert list(out1.items()) == list(out4.items())
    assert list(out1.items()) == [(1, 3), (2, 4), (3, 3), (4, 4), (5, 1)]
    assert rep1.to_json() == rep4.to_json()
    # 15 words, each a 4-byte key and an 8-byte integer
    assert rep1.records_shuffled == 15
    assert rep1.bytes_shuffled == 15 * 12


def test_identity_map_without_reducer(small_dataset: PartitionedDataset) -> None:
    job = MrJob(name="identity", map_fn=lambda ctx, key, value: [(int(key), value)])
    output, report = run_job(job, small_dataset)
    items = list(output.items())
    assert report.records_shuffled == small_dataset.n
    assert [k for k, _ in items] == list(range(small_dataset.n))
    for (key, value), inst in zip(items, small_dataset.instances()):
        assert key == inst.id
        assert np.array_equal(value, inst.features)
    assert report.bytes_shuffled == small_dataset.n * (4 + 8 * small_dataset.d_in)


def test_values_keep_task_then_emission_order() -> None:
    splits = [
        InputSplit(index=0, keys=[0, 1], values=["a", "b"]),
        InputSplit(index=1, keys=[2], values=["c"]),
    ]
    job = MrJob(name="collect", map_fn=lambda ctx, key, value: [(0, value), (1, value)],
                reduce_fn=lambda key, values: [(key, "".join(values))])
    output, _ = run_job(job, splits, parallelism=3)
    assert output.as_dict() == {0: ["abc"], 1: ["abc"]}


class _AggregateMapper(Mapper):
    """Per-task sums over k clusters, one record per cluster."""

    def map_block(self, ctx, split):
        k = ctx.side_data["k"]
        m = ctx.side_data["m"]
        return [(c, (np.zeros(m), 0.0)) for c in range(k)]


def test_cluster_step_byte_accounting() -> None:
    k, m, tasks = 3, 10, 4
    splits = [InputSplit(index=i, keys=[i], values=[None]) for i in range(tasks)]
    job = MrJob(name="aggregate", mapper=_AggregateMapper, side_data={"k": k, "m": m})
    _, report = run_job(job, splits)
    assert report.records_shuffled == tasks * k
    assert report.bytes_shuffled == tasks * (k * (m * 8) + k * 8) + tasks * k * 4


def test_map_only_job_costs_nothing(small_dataset: PartitionedDataset) -> None:
    job = MrJob(name="local", map_fn=lambda ctx, key, value: [(int(key), value)], shuffle=False)
    output, report = run_job(job, small_dataset)
    assert report.bytes_shuffled == 0 and report.records_shuffled == 0
    assert len(output.partitions) == small_dataset.partition_count


def test_chain_of_identity_jobs(small_dataset: PartitionedDataset) -> None:
    identity = lambda ctx, key, value: [(int(key), value)]  # noqa: E731
    jobs = [MrJob(name="first", map_fn=identity), MrJob(name="second", map_fn=identity, reduce_tasks=3)]
    output, reports = run_chain(jobs, small_dataset)
    assert len(reports) == 2
    items = list(output.items())
    assert [k for k, _ in items] == list(range(small_dataset.n))
    for (_, value), inst in zip(items, small_dataset.instances()):
        assert np.array_equal(value, inst.features)


def test_empty_chain_returns_input(small_dataset: PartitionedDataset) -> None:
    output, reports = run_chain([], small_dataset)
    assert output is small_dataset
    assert reports == []


def test_map_failure_names_record() -> None:
    def explode(ctx, key, value):
        if key == 4:
            raise ZeroDivisionError("boom")
        return []

    with pytest.raises(JobError) as info:
        run_job(MrJob(name="fragile", map_fn=explode), _word_splits(), parallelism=2)
    assert info.value.record_id == 4
    assert info.value.task_id == 1
    assert isinstance(info.value.__cause__, ZeroDivisionError)


def test_reduce_failure_names_key() -> None:
    def bad_reduce(key, values):
        raise ValueError("nope")

    with pytest.raises(JobError) as info:
        run_job(MrJob(name="bad", map_fn=_count_words, reduce_fn=bad_reduce), _word_splits())
    assert info.value.record_id == 1


def test_side_data_is_sealed() -> None:
    def mutate(ctx, key, value):
        ctx.side_data["weights"][0] = 5.0
        return []

    weights = np.zeros(3)
    job = MrJob(name="mutate", map_fn=mutate, side_data={"weights": weights})
    with pytest.raises(JobError):
        run_job(job, _word_splits())
    assert weights[0] == 0.0


def test_task_rng_depends_only_on_seed_job_and_task() -> None:
    a = task_rng(7, 100, 3).random(4)
    b = task_rng(7, 100, 3).random(4)
    c = task_rng(7, 100, 4).random(4)
    assert a.tobytes() == b.tobytes()
    assert a.tobytes() != c.tobytes()


def test_sampling_job_independent_of_parallelism(small_dataset: PartitionedDataset) -> None:
    job = MrJob(name="coin", map_fn=lambda ctx, key, value: [(0, int(key))] if ctx.rng.random() < 0.5 else [], seed=9)
    out1, _ = run_job(job, small_dataset, parallelism=1)
    out8, _ = run_job(job, small_dataset, parallelism=8)
    assert list(out1.items()) == list(out8.items())


def test_events_dispatch_in_order_and_survive_handler_errors(capsys) -> None:
    runner = JobRunner(2)
    seen = []
    runner.on("job_start", lambda e: seen.append(("start", e["job"])))
    runner.on("job_done", lambda e: 1 / 0)
    runner.on("job_done", lambda e: seen.append(("done", e["report"].records_shuffled)))
    runner.run_job(MrJob(name="wc", map_fn=_count_words, reduce_fn=_sum_counts), _word_splits())
    assert seen == [("start", "wc"), ("done", 15)]
    assert "[engine_error] Handler error" in capsys.readouterr().out


def test_byte_costs() -> None:
    assert key_nbytes(3) == 4
    assert key_nbytes((1, 2)) == 8
    assert payload_nbytes((np.zeros(5), 1.0)) == 48
    assert payload_nbytes(SparseVector(np.array([1, 4]), np.array([1.0, 2.0]), 6)) == 24
    with pytest.raises(TypeError):
        key_nbytes("word")


def test_combined_report() -> None:
    a = ShuffleReport(job="a", bytes_shuffled=10, records_shuffled=1, map_tasks=2, counters={"x": 1})
    b = ShuffleReport(job="b", bytes_shuffled=5, records_shuffled=2, map_tasks=3, counters={"x": 2})
    total = ShuffleReport.combined("ab", [a, b])
    assert (total.bytes_shuffled, total.records_shuffled, total.map_tasks) == (15, 3, 3)
    assert total.counters == {"x": 3}


def test_runner_rejects_bad_parallelism() -> None:
    with pytest.raises(ValueError):
        JobRunner(0)
