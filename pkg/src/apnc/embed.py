"""
Embed - Blockwise embedding y = R K_L,i as a chain of map-only jobs.

One job per coefficient block computes that block's rows for every instance
and keeps them in the task's local output; a final map-only job joins the
portions per id in block order. Portions never leave their task, so the
chain shuffles nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from dataio.formats import load_embeddings, save_embeddings
from dataio.records import Features, PartitionedDataset, block_ranges
from engine import InputSplit, JobRunner, Mapper, MrJob, ShuffleReport, TaskContext, as_splits
from kernels import kernel_block
from linalg import ordered_matmul, ordered_matvec
from .model import ApncModel


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Embeddings as an n x m array (row i is y^(i)) plus the id ranges of its blocks."""

    values: np.ndarray
    ranges: tuple

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if not np.all(np.isfinite(values)):
            raise ValueError("embedding has non-finite entries")
        ranges = tuple((int(a), int(b)) for a, b in self.ranges)
        expected = 0
        for start, stop in ranges:
            if start != expected or stop <= start:
                raise ValueError("embedding block ranges must cover ids 0..n-1 in order")
            expected = stop
        if expected != values.shape[0]:
            raise ValueError("embedding block ranges must cover ids 0..n-1 in order")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "ranges", ranges)

    @classmethod
    def from_array(cls, values: np.ndarray, partition_count: int = 1) -> "EmbeddingMatrix":
        values = np.asarray(values, dtype=np.float64)
        return cls(values, tuple(block_ranges(values.shape[0], partition_count)))

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        return int(self.values.shape[1])

    @property
    def partition_count(self) -> int:
        return len(self.ranges)

    def column(self, i: int) -> np.ndarray:
        return self.values[i]

    def repartition(self, partition_count: int) -> "EmbeddingMatrix":
        return EmbeddingMatrix.from_array(self.values, partition_count)

    def splits(self, labels: np.ndarray | None = None) -> list[InputSplit]:
        out = []
        for index, (start, stop) in enumerate(self.ranges):
            columns = {} if labels is None else {"label": labels[start:stop]}
            out.append(InputSplit(
                index=index,
                keys=np.arange(start, stop, dtype=np.int64),
                values=self.values[start:stop],
                columns=columns,
            ))
        return out

    def save(self, path: str | Path) -> None:
        save_embeddings(self.values, path)

    @classmethod
    def load(cls, path: str | Path, partition_count: int = 1) -> "EmbeddingMatrix":
        return cls.from_array(load_embeddings(path), partition_count)


class BlockEmbedMapper(Mapper):
    """Rows of one coefficient block for every instance in the split."""

    def map_block(self, ctx: TaskContext, split: InputSplit) -> Iterable:
        R = ctx.side_data["R"]
        stack = ctx.side_data["landmarks"]
        kernel = ctx.side_data["kernel"]
        K = np.empty((len(stack), len(split)), dtype=np.float64)
        for j, (key, features) in enumerate(split.records()):
            ctx.current_record = int(key)
            K[:, j] = kernel_block(kernel, stack, features)
        ctx.local_output["ids"] = np.asarray(split.keys, dtype=np.int64)
        ctx.local_output["portion"] = ordered_matmul(R, K).T
        return ()


class JoinMapper(Mapper):
    """Concatenates one task's block portions per id, in block order."""

    def map_block(self, ctx: TaskContext, split: InputSplit) -> Iterable:
        portions = split.columns["portions"]
        ctx.local_output["ids"] = np.asarray(split.keys, dtype=np.int64)
        ctx.local_output["Y"] = np.hstack(portions) if portions else np.empty((len(split), 0))
        return ()


def embed_all(
    dataset: PartitionedDataset,
    model: ApncModel,
    parallelism: int = 1,
    runner: JobRunner | None = None,
) -> tuple[EmbeddingMatrix, ShuffleReport]:
    if dataset.d_in != model.d_in:
        raise ValueError(f"dimension mismatch: dataset d_in={dataset.d_in}, model d_in={model.d_in}")
    runner = runner or JobRunner(parallelism)
    splits = as_splits(dataset)

    reports = []
    portions: list[list[np.ndarray]] = [[] for _ in splits]
    for b in range(model.q):
        job = MrJob(
            name=f"embed_block_{b}",
            mapper=BlockEmbedMapper,
            side_data=model.side_data(b),
            shuffle=False,
        )
        output = runner.run_job(job, splits)
        reports.append(output.report)
        for task, local in enumerate(output.side_outputs):
            portions[task].append(local["portion"])

    join_splits = [
        InputSplit(index=s.index, keys=s.keys, values=s.values, columns={"portions": tuple(portions[i])})
        for i, s in enumerate(splits)
    ]
    join = runner.run_job(MrJob(name="embed_join", mapper=JoinMapper, shuffle=False), join_splits)
    reports.append(join.report)

    blocks = []
    for split, local in zip(join_splits, join.side_outputs):
        if local["ids"].size != len(split) or local["Y"].shape[0] != len(split):
            raise RuntimeError(f"missing embedding portion in task {split.index}")
        blocks.append(local["Y"])
    values = np.vstack(blocks) if blocks else np.empty((0, model.m_effective))
    ranges = tuple((b.start, b.stop) for b in dataset.blocks)

    report = ShuffleReport.combined("embed", reports)
    print(f"[embed] Embedded {dataset.n} instances into m={model.m_effective} "
          f"over {model.q} block job(s), {len(splits)} task(s)")
    return EmbeddingMatrix(values, ranges), report


def embed_one(x: Features, model: ApncModel) -> np.ndarray:
    portions = []
    for b, R in enumerate(model.blocks):
        k = kernel_block(model.kernel, model.landmarks.blocks[b].stack, x)
        portions.append(ordered_matvec(R, k))
    return np.concatenate(portions)
