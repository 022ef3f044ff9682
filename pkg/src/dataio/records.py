"""Records - Instances, blocks and partitioned datasets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np


class MemoryBudgetError(ValueError):
    """A block does not fit the per-machine memory budget."""


@dataclass(frozen=True)
class SparseVector:
    """Sparse real vector with strictly increasing 0-based indices."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if indices.shape != values.shape or indices.ndim != 1:
            raise ValueError("sparse indices and values must be 1-D and the same length")
        if indices.size and (np.any(np.diff(indices) <= 0) or indices[0] < 0):
            raise ValueError("indices not ascending")
        if indices.size and indices[-1] >= self.dim:
            raise ValueError(f"index {indices[-1]} out of range for dimension {self.dim}")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        dense[self.indices] = self.values
        return dense

    def with_dim(self, dim: int) -> "SparseVector":
        return SparseVector(self.indices, self.values, dim)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and self.values.tobytes() == other.values.tobytes()
        )


Features = Union[np.ndarray, SparseVector]


def feature_dim(features: Features) -> int:
    if isinstance(features, SparseVector):
        return features.dim
    return int(features.shape[0])


def feature_nbytes(features: Features) -> int:
    """Serialized size: 8 bytes per dense float, 12 per sparse entry."""
    if isinstance(features, SparseVector):
        return 12 * features.nnz
    return 8 * int(features.size)


def as_dense(features: Features) -> np.ndarray:
    if isinstance(features, SparseVector):
        return features.to_dense()
    return features


@dataclass(frozen=True, eq=False)
class Instance:
    id: int
    features: Features


@dataclass(frozen=True, eq=False)
class Block:
    """A contiguous id range [start, start + len(features))."""

    index: int
    start: int
    features: tuple

    def __len__(self) -> int:
        return len(self.features)

    @property
    def stop(self) -> int:
        return self.start + len(self.features)

    @property
    def nbytes(self) -> int:
        # 8 bytes of key per record plus the payload
        return sum(8 + feature_nbytes(f) for f in self.features)

    def records(self) -> Iterator[tuple[int, Features]]:
        for offset, features in enumerate(self.features):
            yield self.start + offset, features


def block_ranges(n: int, partition_count: int) -> list[tuple[int, int]]:
    """Contiguous ranges of ceil(n / B) ids; no trailing empty blocks."""
    if partition_count < 1:
        raise ValueError("partition_count must be >= 1")
    if n == 0:
        return []
    size = math.ceil(n / partition_count)
    return [(start, min(n, start + size)) for start in range(0, n, size)]


@dataclass(frozen=True, eq=False)
class PartitionedDataset:
    blocks: tuple
    n: int
    d_in: int
    memory_budget_bytes: int | None = field(default=None, compare=False)

    @classmethod
    def from_features(
        cls,
        features: Sequence[Features],
        d_in: int,
        partition_count: int = 1,
        memory_budget_bytes: int | None = None,
    ) -> "PartitionedDataset":
        items = list(features)
        blocks = []
        for index, (start, stop) in enumerate(block_ranges(len(items), partition_count)):
            block = Block(index=index, start=start, features=tuple(items[start:stop]))
            if memory_budget_bytes is not None and block.nbytes > memory_budget_bytes:
                raise MemoryBudgetError(
                    f"block {index} needs {block.nbytes} bytes, "
                    f"budget is {memory_budget_bytes}"
                )
            blocks.append(block)
        return cls(
            blocks=tuple(blocks),
            n=len(items),
            d_in=d_in,
            memory_budget_bytes=memory_budget_bytes,
        )

    @classmethod
    def from_array(
        cls,
        X: np.ndarray,
        partition_count: int = 1,
        memory_budget_bytes: int | None = None,
    ) -> "PartitionedDataset":
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("expected a 2-D array of instances")
        rows = [X[i].copy() for i in range(X.shape[0])]
        return cls.from_features(rows, X.shape[1], partition_count, memory_budget_bytes)

    @property
    def partition_count(self) -> int:
        return len(self.blocks)

    def repartition(self, partition_count: int) -> "PartitionedDataset":
        return PartitionedDataset.from_features(
            self.features(), self.d_in, partition_count, self.memory_budget_bytes
        )

    def features(self) -> list[Features]:
        return [f for block in self.blocks for f in block.features]

    def instance(self, i: int) -> Instance:
        if not 0 <= i < self.n:
            raise IndexError(f"instance id {i} out of range [0, {self.n})")
        for block in self.blocks:
            if block.start <= i < block.stop:
                return Instance(i, block.features[i - block.start])
        raise IndexError(i)

    def instances(self) -> Iterator[Instance]:
        for block in self.blocks:
            for i, features in block.records():
                yield Instance(i, features)

    def to_dense(self) -> np.ndarray:
        """Stack every instance into an n x d_in array (small datasets only)."""
        dense = np.zeros((self.n, self.d_in), dtype=np.float64)
        for inst in self.instances():
            dense[inst.id] = as_dense(inst.features)
        return dense


@dataclass(frozen=True, eq=False)
class LabelVector:
    labels: np.ndarray

    def __post_init__(self) -> None:
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValueError("labels must be 1-D")
        if labels.size and labels.min() < 0:
            raise ValueError("class ids must be non-negative")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return int(self.labels.size)
