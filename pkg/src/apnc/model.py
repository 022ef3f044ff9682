"""Model - Landmarks and block-diagonal embedding coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from dataio.records import feature_dim, feature_nbytes
from kernels import FeatureStack, KernelSpec

VARIANTS = ("nystrom", "stable")
DISCREPANCIES = ("l2", "l1")


class SamplingError(RuntimeError):
    """Landmark sampling stayed below the minimum count after every retry."""


@dataclass(frozen=True, eq=False)
class LandmarkBlock:
    ids: np.ndarray
    features: tuple

    def __post_init__(self) -> None:
        ids = np.ascontiguousarray(self.ids, dtype=np.int64)
        if ids.ndim != 1 or ids.size != len(self.features):
            raise ValueError("landmark ids and features must align")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "features", tuple(self.features))

    def __len__(self) -> int:
        return int(self.ids.size)

    @cached_property
    def stack(self) -> FeatureStack:
        return FeatureStack(self.features)

    @property
    def nbytes(self) -> int:
        return sum(8 + feature_nbytes(f) for f in self.features)


@dataclass(frozen=True, eq=False)
class Landmarks:
    """Landmark instances split into q disjoint blocks."""

    blocks: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "blocks", tuple(self.blocks))
        if not self.blocks:
            raise ValueError("landmarks need at least one block")
        all_ids = np.concatenate([b.ids for b in self.blocks])
        if np.unique(all_ids).size != all_ids.size:
            raise ValueError("landmark blocks must be disjoint by instance id")

    @classmethod
    def single(cls, ids: np.ndarray, features: tuple) -> "Landmarks":
        return cls((LandmarkBlock(ids, features),))

    @property
    def q(self) -> int:
        return len(self.blocks)

    @property
    def l_total(self) -> int:
        return sum(len(b) for b in self.blocks)

    def features(self) -> list:
        return [f for b in self.blocks for f in b.features]


@dataclass(frozen=True, eq=False)
class ApncModel:
    """Coefficients R^(1..q) with their landmark blocks.

    Block b maps the kernel values against landmark block b to rows of the
    embedding; the full R is block-diagonal with these blocks in order.
    """

    variant: str
    landmarks: Landmarks
    blocks: tuple
    kernel: KernelSpec
    discrepancy: str
    seed: int
    d_in: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.discrepancy not in DISCREPANCIES:
            raise ValueError(f"unknown discrepancy {self.discrepancy!r}")
        blocks = tuple(np.ascontiguousarray(R, dtype=np.float64) for R in self.blocks)
        if len(blocks) != self.landmarks.q:
            raise ValueError(f"{len(blocks)} coefficient blocks for {self.landmarks.q} landmark blocks")
        for b, (R, lb) in enumerate(zip(blocks, self.landmarks.blocks)):
            if R.ndim != 2 or R.shape[1] != len(lb):
                raise ValueError(f"block {b}: R has shape {R.shape}, landmark block has {len(lb)}")
            if not np.all(np.isfinite(R)):
                raise ValueError(f"block {b}: non-finite coefficients")
            for f in lb.features:
                if feature_dim(f) != self.d_in:
                    raise ValueError(f"block {b}: landmark dimension {feature_dim(f)} != d_in {self.d_in}")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def q(self) -> int:
        return self.landmarks.q

    @property
    def m_effective(self) -> int:
        return sum(R.shape[0] for R in self.blocks)

    @property
    def block_rows(self) -> list[tuple[int, int]]:
        """Row range of each block inside the full embedding."""
        ranges, start = [], 0
        for R in self.blocks:
            ranges.append((start, start + R.shape[0]))
            start += R.shape[0]
        return ranges

    def full_coefficients(self) -> np.ndarray:
        """The block-diagonal R as one dense m_effective x l_total matrix."""
        R = np.zeros((self.m_effective, self.landmarks.l_total))
        col = 0
        for (r0, r1), block in zip(self.block_rows, self.blocks):
            R[r0:r1, col:col + block.shape[1]] = block
            col += block.shape[1]
        return R

    @property
    def l1_distance_scale(self) -> float | None:
        """Factor turning the mean |y_i - y_j| per dimension into a kernel-space distance.

        Defined for the stable variant with t < l; None otherwise.
        """
        t = self.metadata.get("t")
        l = self.landmarks.l_total
        if self.variant != "stable" or t is None or t >= l:
            return None
        return math.sqrt(math.pi / 2.0) * math.sqrt(l * (l - 1) / (l - t))

    def side_data(self, b: int) -> dict[str, Any]:
        return {"R": self.blocks[b], "landmarks": self.landmarks.blocks[b].stack, "kernel": self.kernel}
