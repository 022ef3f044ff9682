"""
Job - Map/reduce job definitions, task context and shuffle accounting.

A job is a mapper factory plus an optional reducer. Each map task gets a
fresh mapper, one input split, the job's sealed side data and its own
counter-based random stream. Emitted (key, value) pairs are metered at a
fixed byte cost: 4 bytes per integer key component, 8 per scalar, 8 per
array element, 12 per stored sparse entry.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Any, Callable, Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from dataio.records import SparseVector

Key = Any  # int or tuple of ints
Pair = tuple


class JobError(RuntimeError):
    """A map or reduce callback failed; the original exception is chained."""

    def __init__(self, job: str, task_id: int, record_id: Any, cause: BaseException) -> None:
        self.job = job
        self.task_id = task_id
        self.record_id = record_id
        super().__init__(
            f"job {job!r} failed in task {task_id} at record {record_id}: "
            f"{type(cause).__name__}: {cause}"
        )


def key_nbytes(key: Key) -> int:
    if isinstance(key, (bool, np.bool_)):
        raise TypeError(f"unsupported shuffle key {key!r}")
    if isinstance(key, (int, np.integer)):
        return 4
    if isinstance(key, tuple) and all(isinstance(k, (int, np.integer)) for k in key):
        return 4 * len(key)
    raise TypeError(f"shuffle keys must be ints or tuples of ints, got {key!r}")


def payload_nbytes(value: Any) -> int:
    if value is None:
        return 0
    if isinstance(value, (bool, int, float, np.integer, np.floating, np.bool_)):
        return 8
    if isinstance(value, np.ndarray):
        return 8 * int(value.size)
    if isinstance(value, SparseVector):
        return 12 * value.nnz
    if isinstance(value, (tuple, list)):
        return sum(payload_nbytes(v) for v in value)
    if isinstance(value, str):
        return len(value.encode("utf-8"))
    raise TypeError(f"cannot meter shuffle value of type {type(value).__name__}")


def side_nbytes(value: Any) -> int:
    """Resident size of side data; objects may report their own `nbytes`."""
    if isinstance(value, Mapping):
        return sum(side_nbytes(v) for v in value.values())
    if isinstance(value, (tuple, list)):
        return sum(side_nbytes(v) for v in value)
    if isinstance(value, (np.ndarray, SparseVector, bool, int, float, np.integer, np.floating)):
        return payload_nbytes(value)
    nbytes = getattr(value, "nbytes", None)
    return int(nbytes) if isinstance(nbytes, (int, np.integer)) else 0


def seal(value: Any) -> Any:
    """Read-only view of side data: arrays are copied and locked, mappings proxied."""
    if isinstance(value, np.ndarray):
        sealed = value.copy()
        sealed.setflags(write=False)
        return sealed
    if isinstance(value, Mapping):
        return MappingProxyType({k: seal(v) for k, v in value.items()})
    if isinstance(value, (tuple, list)):
        return tuple(seal(v) for v in value)
    return value


def job_id_for(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def task_rng(seed: int, job_id: int, task_id: int) -> np.random.Generator:
    """Counter-based stream for one (job, task); independent of scheduling."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(job_id, task_id)))
    )


@dataclass(frozen=True, eq=False)
class InputSplit:
    """One map task's input: aligned keys and values, plus optional aligned columns."""

    index: int
    keys: Sequence[Key]
    values: Sequence[Any]
    columns: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.keys)

    def records(self) -> Iterator[Pair]:
        return zip(self.keys, self.values)


@dataclass(eq=False)
class TaskContext:
    job_name: str
    job_id: int
    task_id: int
    side_data: Any
    rng: np.random.Generator
    counters: dict = field(default_factory=dict)
    local_output: dict = field(default_factory=dict)
    current_record: Any = None

    def count(self, name: str, amount: float = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + amount


class Mapper:
    """Base mapper. Override `map` for per-record work or `map_block` for a whole split."""

    def setup(self, ctx: TaskContext) -> None:
        pass

    def map(self, ctx: TaskContext, key: Key, value: Any) -> Iterable[Pair]:
        return ()

    def map_block(self, ctx: TaskContext, split: InputSplit) -> Iterable[Pair]:
        emitted: list[Pair] = []
        for key, value in split.records():
            ctx.current_record = key
            emitted.extend(self.map(ctx, key, value))
        return emitted

    def cleanup(self, ctx: TaskContext) -> Iterable[Pair]:
        return ()


class FunctionMapper(Mapper):
    def __init__(self, fn: Callable[[TaskContext, Key, Any], Iterable[Pair]]) -> None:
        self._fn = fn

    def map(self, ctx: TaskContext, key: Key, value: Any) -> Iterable[Pair]:
        return self._fn(ctx, key, value)


@dataclass(eq=False)
class MrJob:
    """A map/reduce job.

    shuffle=False makes a map-only job: emissions stay in the producing task's
    partition and cost nothing. With shuffle=True and no reduce_fn, values
    pass through an identity reduce.
    """

    name: str
    mapper: Optional[Callable[[], Mapper]] = None
    map_fn: Optional[Callable[[TaskContext, Key, Any], Iterable[Pair]]] = None
    reduce_fn: Optional[Callable[[Key, list], Iterable[Pair]]] = None
    side_data: Any = None
    shuffle: bool = True
    reduce_tasks: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if (self.mapper is None) == (self.map_fn is None):
            raise ValueError(f"job {self.name!r} needs exactly one of mapper or map_fn")
        if self.reduce_fn is not None and not self.shuffle:
            raise ValueError(f"job {self.name!r} has a reducer but shuffle=False")
        if self.reduce_tasks < 1:
            raise ValueError("reduce_tasks must be >= 1")

    @property
    def job_id(self) -> int:
        return job_id_for(self.name)

    def new_mapper(self) -> Mapper:
        if self.mapper is not None:
            return self.mapper()
        return FunctionMapper(self.map_fn)


@dataclass
class ShuffleReport:
    job: str
    bytes_shuffled: int = 0
    records_shuffled: int = 0
    map_tasks: int = 0
    reduce_tasks: int = 0
    peak_side_data_bytes: int = 0
    counters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "job": self.job,
            "bytes_shuffled": self.bytes_shuffled,
            "records_shuffled": self.records_shuffled,
            "map_tasks": self.map_tasks,
            "reduce_tasks": self.reduce_tasks,
            "peak_side_data_bytes": self.peak_side_data_bytes,
            "counters": dict(sorted(self.counters.items())),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def combined(job: str, reports: Sequence["ShuffleReport"]) -> "ShuffleReport":
        """Totals over several jobs; task counts and side data take the maximum."""
        total = ShuffleReport(job=job)
        for report in reports:
            total.bytes_shuffled += report.bytes_shuffled
            total.records_shuffled += report.records_shuffled
            total.map_tasks = max(total.map_tasks, report.map_tasks)
            total.reduce_tasks = max(total.reduce_tasks, report.reduce_tasks)
            total.peak_side_data_bytes = max(total.peak_side_data_bytes, report.peak_side_data_bytes)
            for name, value in report.counters.items():
                total.counters[name] = total.counters.get(name, 0) + value
        return total
