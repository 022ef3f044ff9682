"""
Runner - In-process map/reduce execution over a thread pool.

Map tasks are the input splits, so results never depend on how many worker
threads run them. The shuffle sorts keys ascending and keeps each key's
values in (task, emission) order; reduce partitions are contiguous key ranges.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Sequence, Union

import numpy as np

from dataio.records import PartitionedDataset, block_ranges
from .job import (
    InputSplit,
    JobError,
    MrJob,
    Pair,
    ShuffleReport,
    TaskContext,
    key_nbytes,
    payload_nbytes,
    seal,
    side_nbytes,
    task_rng,
)

JobInput = Union[PartitionedDataset, "JobOutput", Sequence[InputSplit]]


@dataclass(eq=False)
class JobOutput:
    """Output partitions in order; for map-only jobs one partition per map task."""

    partitions: list
    side_outputs: list = field(default_factory=list)
    report: ShuffleReport | None = None

    def items(self) -> Iterator[Pair]:
        for partition in self.partitions:
            yield from partition

    def as_dict(self) -> dict:
        """key -> list of values, keys in partition order."""
        grouped: dict = {}
        for key, value in self.items():
            grouped.setdefault(key, []).append(value)
        return grouped

    def splits(self) -> list[InputSplit]:
        return [
            InputSplit(index=i, keys=[k for k, _ in part], values=[v for _, v in part])
            for i, part in enumerate(self.partitions)
        ]


def as_splits(data: JobInput) -> list[InputSplit]:
    if isinstance(data, PartitionedDataset):
        return [
            InputSplit(
                index=block.index,
                keys=np.arange(block.start, block.stop, dtype=np.int64),
                values=block.features,
            )
            for block in data.blocks
        ]
    if isinstance(data, JobOutput):
        return data.splits()
    return list(data)


@dataclass(eq=False)
class _TaskResult:
    pairs: list
    counters: dict
    local_output: dict
    nbytes: int


class JobRunner:
    """Runs jobs and chains; observers subscribe with `on(event, handler)`.

    Events: job_start {job, map_tasks}, task_done {job, task_id, records},
    job_done {job, report}.
    """

    def __init__(self, parallelism: int = 1) -> None:
        if parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {parallelism}")
        self._parallelism = parallelism
        self._handlers: dict[str, list[Callable]] = {}

    @property
    def parallelism(self) -> int:
        return self._parallelism

    def on(self, event_type: str, handler: Callable) -> None:
        """Register an event handler."""
        if event_type not in self._handlers:
            self._handlers[event_type] = []
        self._handlers[event_type].append(handler)

    def _dispatch(self, event_type: str, event: dict) -> None:
        for handler in self._handlers.get(event_type, []):
            try:
                handler(event)
            except Exception as e:
                print(f"[engine_error] Handler error: {e}")

    def _run_map_task(self, job: MrJob, side_data: Any, split: InputSplit) -> _TaskResult:
        ctx = TaskContext(
            job_name=job.name,
            job_id=job.job_id,
            task_id=split.index,
            side_data=side_data,
            rng=task_rng(job.seed, job.job_id, split.index),
        )
        mapper = job.new_mapper()
        try:
            mapper.setup(ctx)
            pairs = list(mapper.map_block(ctx, split))
            ctx.current_record = None
            pairs.extend(mapper.cleanup(ctx))
        except JobError:
            raise
        except Exception as e:
            raise JobError(job.name, split.index, ctx.current_record, e) from e

        nbytes = 0
        if job.shuffle:
            nbytes = sum(key_nbytes(k) + payload_nbytes(v) for k, v in pairs)
        return _TaskResult(pairs, ctx.counters, ctx.local_output, nbytes)

    def _pool_map(self, fn: Callable, items: Sequence) -> list:
        if self._parallelism == 1 or len(items) <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self._parallelism) as pool:
            return list(pool.map(fn, items))

    def run_job(self, job: MrJob, data: JobInput) -> JobOutput:
        splits = as_splits(data)
        side_data = seal(job.side_data)
        self._dispatch("job_start", {"job": job.name, "map_tasks": len(splits)})

        def run_split(split: InputSplit) -> _TaskResult:
            result = self._run_map_task(job, side_data, split)
            self._dispatch("task_done", {"job": job.name, "task_id": split.index, "records": len(split)})
            return result

        results = self._pool_map(run_split, splits)

        report = ShuffleReport(
            job=job.name,
            map_tasks=len(splits),
            peak_side_data_bytes=side_nbytes(job.side_data),
        )
        for result in results:
            for name, value in result.counters.items():
                report.counters[name] = report.counters.get(name, 0) + value
        side_outputs = [result.local_output for result in results]

        if not job.shuffle:
            output = JobOutput([r.pairs for r in results], side_outputs, report)
        else:
            output = self._shuffle_and_reduce(job, results, report, side_outputs)

        self._dispatch("job_done", {"job": job.name, "report": report})
        return output

    def _shuffle_and_reduce(
        self,
        job: MrJob,
        results: list[_TaskResult],
        report: ShuffleReport,
        side_outputs: list,
    ) -> JobOutput:
        emitted = [pair for result in results for pair in result.pairs]
        report.records_shuffled = len(emitted)
        report.bytes_shuffled = sum(result.nbytes for result in results)

        # stable sort keeps (task, emission) order within a key
        emitted.sort(key=lambda pair: pair[0])
        groups: list[tuple[Any, list]] = []
        for key, value in emitted:
            if groups and groups[-1][0] == key:
                groups[-1][1].append(value)
            else:
                groups.append((key, [value]))

        ranges = block_ranges(len(groups), job.reduce_tasks)
        report.reduce_tasks = len(ranges)

        def run_reduce(task: tuple[int, tuple[int, int]]) -> list:
            task_id, (start, stop) = task
            out: list = []
            for key, values in groups[start:stop]:
                if job.reduce_fn is None:
                    out.extend((key, v) for v in values)
                    continue
                try:
                    out.extend(job.reduce_fn(key, values))
                except Exception as e:
                    raise JobError(job.name, task_id, key, e) from e
            return out

        partitions = self._pool_map(run_reduce, list(enumerate(ranges)))
        return JobOutput(partitions, side_outputs, report)

    def run_chain(self, jobs: Sequence[MrJob], data: JobInput) -> tuple[Any, list[ShuffleReport]]:
        """Run jobs in order, each on the previous output's partitions."""
        current: Any = data
        reports: list[ShuffleReport] = []
        for job in jobs:
            current = self.run_job(job, current)
            reports.append(current.report)
        return current, reports


def run_job(
    job: MrJob,
    data: JobInput,
    parallelism: int = 1,
) -> tuple[JobOutput, ShuffleReport]:
    output = JobRunner(parallelism).run_job(job, data)
    return output, output.report


def run_chain(
    jobs: Sequence[MrJob],
    data: JobInput,
    parallelism: int = 1,
) -> tuple[Any, list[ShuffleReport]]:
    return JobRunner(parallelism).run_chain(jobs, data)
