"""Kernel functions - Closed-form kernels on dense and sparse instances."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from dataio.records import Features, SparseVector, as_dense, feature_dim, feature_nbytes

KINDS = ("rbf", "polynomial", "neural", "linear")

# Kinds that need squared distances rather than dot products.
_DISTANCE_KINDS = frozenset({"rbf"})


@dataclass(frozen=True)
class KernelSpec:
    """An immutable kernel choice. Unused parameters keep their defaults."""

    kind: str
    sigma: float = 1.0
    degree: int = 5
    offset: float = 1.0
    a: float = 0.0045
    b: float = 0.11

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise ValueError(f"rbf sigma must be > 0, got {self.sigma}")
        if self.kind == "polynomial" and self.degree < 1:
            raise ValueError(f"polynomial degree must be >= 1, got {self.degree}")
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @classmethod
    def rbf(cls, sigma: float) -> "KernelSpec":
        return cls("rbf", sigma=sigma)

    @classmethod
    def polynomial(cls, degree: int = 5, offset: float = 1.0) -> "KernelSpec":
        return cls("polynomial", degree=degree, offset=offset)

    @classmethod
    def neural(cls, a: float = 0.0045, b: float = 0.11) -> "KernelSpec":
        return cls("neural", a=a, b=b)

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def from_stored(cls, kind: str, **params: float) -> "KernelSpec":
        """Rebuild a spec from every stored parameter, used or not."""
        return cls(kind, **params)

    @classmethod
    def from_config(cls, config: Mapping[str, str]) -> "KernelSpec":
        """Build from `kernel.*` keys. An rbf without `kernel.sigma` must be self-tuned first."""
        kind = config.get("kernel.kind", "rbf").strip()
        params: dict[str, float] = {}
        try:
            if "kernel.sigma" in config:
                params["sigma"] = float(config["kernel.sigma"])
            if "kernel.degree" in config:
                params["degree"] = int(config["kernel.degree"])
            if "kernel.offset" in config:
                params["offset"] = float(config["kernel.offset"])
            if "kernel.a" in config:
                params["a"] = float(config["kernel.a"])
            if "kernel.b" in config:
                params["b"] = float(config["kernel.b"])
        except ValueError as e:
            raise ValueError(f"bad kernel parameter: {e}") from None
        return cls(kind, **params)

    def describe(self) -> dict:
        if self.kind == "rbf":
            return {"kind": "rbf", "sigma": self.sigma}
        if self.kind == "polynomial":
            return {"kind": "polynomial", "degree": self.degree, "offset": self.offset}
        if self.kind == "neural":
            return {"kind": "neural", "a": self.a, "b": self.b}
        return {"kind": "linear"}


class FeatureStack:
    """A fixed set of instances laid out once for repeated kernel evaluation.

    Dense instances are stacked row-wise; an all-sparse set keeps its
    sparse rows and densifies lazily only when queried with a dense instance.
    """

    def __init__(self, features: Sequence[Features]) -> None:
        self.features = tuple(features)
        if not self.features:
            raise ValueError("empty landmark block")
        dims = {feature_dim(f) for f in self.features}
        if len(dims) != 1:
            raise ValueError(f"dimension mismatch within landmark block: {sorted(dims)}")
        self.dim = dims.pop()
        self.sparse = all(isinstance(f, SparseVector) for f in self.features)
        self._dense: np.ndarray | None = None
        if not self.sparse:
            self._dense = self._stacked()

    def _stacked(self) -> np.ndarray:
        # shared with map tasks as side data, so never writable
        stacked = np.vstack([as_dense(f) for f in self.features])
        stacked.setflags(write=False)
        return stacked

    def __len__(self) -> int:
        return len(self.features)

    @property
    def nbytes(self) -> int:
        return sum(feature_nbytes(f) for f in self.features)

    @property
    def dense(self) -> np.ndarray:
        if self._dense is None:
            self._dense = self._stacked()
        return self._dense


def as_stack(landmarks: Union[FeatureStack, Sequence[Features]]) -> FeatureStack:
    if isinstance(landmarks, FeatureStack):
        return landmarks
    return FeatureStack(landmarks)


def _sparse_dot(x: SparseVector, y: SparseVector) -> float:
    # shared indices in ascending order; the product array is the same for (x, y) and (y, x)
    _, ix, iy = np.intersect1d(x.indices, y.indices, assume_unique=True, return_indices=True)
    return float(np.sum(x.values[ix] * y.values[iy]))


def _sparse_sqdist(x: SparseVector, y: SparseVector) -> float:
    union = np.union1d(x.indices, y.indices)
    diff = np.zeros(union.size, dtype=np.float64)
    diff[np.searchsorted(union, x.indices)] += x.values
    diff[np.searchsorted(union, y.indices)] -= y.values
    return float(np.sum(diff * diff))


def _raw(kind: str, stack: FeatureStack, x: Features) -> np.ndarray:
    """Dot products (or squared distances for distance kernels) of every row with x."""
    if feature_dim(x) != stack.dim:
        raise ValueError(f"dimension mismatch: instance has {feature_dim(x)}, landmarks have {stack.dim}")
    distance = kind in _DISTANCE_KINDS

    if stack.sparse and isinstance(x, SparseVector):
        pair = _sparse_sqdist if distance else _sparse_dot
        return np.array([pair(f, x) for f in stack.features], dtype=np.float64)

    xd = as_dense(x)
    if distance:
        diff = stack.dense - xd
        return np.sum(diff * diff, axis=1)
    return np.sum(stack.dense * xd, axis=1)


def _finish(spec: KernelSpec, raw: np.ndarray) -> np.ndarray:
    if spec.kind == "rbf":
        return np.exp(-raw / (2.0 * spec.sigma * spec.sigma))
    if spec.kind == "polynomial":
        return (raw + spec.offset) ** spec.degree
    if spec.kind == "neural":
        return np.tanh(spec.a * raw + spec.b)
    return raw


def kernel_block(
    spec: KernelSpec,
    landmarks: Union[FeatureStack, Sequence[Features]],
    x: Features,
) -> np.ndarray:
    """Kernel values between every landmark and x, in landmark order."""
    stack = as_stack(landmarks)
    return _finish(spec, _raw(spec.kind, stack, x))


def kernel_pair(spec: KernelSpec, x: Features, y: Features) -> float:
    return float(kernel_block(spec, FeatureStack([x]), y)[0])


def kernel_gram(spec: KernelSpec, instances: Sequence[Features]) -> np.ndarray:
    """Symmetric gram matrix; entry (i, j) equals kernel_pair(spec, x_i, x_j) exactly."""
    stack = as_stack(instances)
    gram = np.empty((len(stack), len(stack)), dtype=np.float64)
    for i, x in enumerate(stack.features):
        gram[i] = kernel_block(spec, stack, x)
    return gram


def sqdist(x: Features, y: Features) -> float:
    """Squared Euclidean distance, computed the way the rbf kernel computes it."""
    return float(_raw("rbf", FeatureStack([x]), y)[0])
