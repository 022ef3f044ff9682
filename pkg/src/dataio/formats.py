"""
Binary formats - APNC model files and embedding files.

All integers are little-endian; all floats are little-endian IEEE-754 doubles,
so a save/load round trip reproduces every value bit for bit.

Model file ("APNC1"):
    header     format_version u32, q u32, m u32, l u32, d_in u32, discrepancy u8
    extension  variant u8, kernel kind u8, degree u32, sigma f64, offset f64,
               a f64, b f64, seed u64
    blocks     per block: rows u32, cols u32, rows*cols f64 (row-major)
    landmarks  per block: count u32, then per landmark: id u64, tag u8 and
               either d_in f64 (tag 0, dense) or nnz u32, nnz u32, nnz f64 (tag 1)
    metadata   length u32, UTF-8 JSON object

Embedding file ("APNCY"):
    header     n u32, m u32
    columns    per instance: id u32, m f64
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .records import SparseVector

if TYPE_CHECKING:
    from apnc.model import ApncModel

MODEL_MAGIC = b"APNC1"
EMBEDDING_MAGIC = b"APNCY"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<IIIIIB")
_EXTENSION = struct.Struct("<BBIddddQ")
_BLOCK = struct.Struct("<II")
_U32 = struct.Struct("<I")
_LANDMARK = struct.Struct("<QB")

DISCREPANCY_TAGS = {"l2": 0, "l1": 1}
VARIANT_TAGS = {"nystrom": 0, "stable": 1}
KERNEL_TAGS = {"rbf": 0, "polynomial": 1, "neural": 2, "linear": 3}


class ModelFormatError(ValueError):
    """A binary model or embedding file is malformed."""


def _reverse(tags: dict[str, int], value: int, what: str) -> str:
    for name, tag in tags.items():
        if tag == value:
            return name
    raise ModelFormatError(f"unknown {what} tag {value}")


class _Reader:
    """Cursor over a byte buffer that reports short reads as truncation."""

    def __init__(self, data: bytes, truncated_message: str) -> None:
        self._data = data
        self._pos = 0
        self._truncated = truncated_message

    def take(self, size: int) -> bytes:
        if size < 0 or self._pos + size > len(self._data):
            raise ModelFormatError(self._truncated)
        chunk = self._data[self._pos:self._pos + size]
        self._pos += size
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))

    def floats(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(8 * count), dtype="<f8").astype(np.float64)

    @property
    def exhausted(self) -> bool:
        return self._pos == len(self._data)


def _f64(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def save_model(model: "ApncModel", path: str | Path) -> None:
    kernel = model.kernel
    parts = [
        MODEL_MAGIC,
        _HEADER.pack(
            FORMAT_VERSION,
            model.landmarks.q,
            model.m_effective,
            model.landmarks.l_total,
            model.d_in,
            DISCREPANCY_TAGS[model.discrepancy],
        ),
        _EXTENSION.pack(
            VARIANT_TAGS[model.variant],
            KERNEL_TAGS[kernel.kind],
            kernel.degree,
            kernel.sigma,
            kernel.offset,
            kernel.a,
            kernel.b,
            model.seed,
        ),
    ]
    for R in model.blocks:
        rows, cols = R.shape
        parts.append(_BLOCK.pack(rows, cols))
        parts.append(_f64(R))
    for block in model.landmarks.blocks:
        parts.append(_U32.pack(len(block.ids)))
        for landmark_id, features in zip(block.ids, block.features):
            if isinstance(features, SparseVector):
                parts.append(_LANDMARK.pack(int(landmark_id), 1))
                parts.append(_U32.pack(features.nnz))
                parts.append(np.ascontiguousarray(features.indices, dtype="<u4").tobytes())
                parts.append(_f64(features.values))
            else:
                parts.append(_LANDMARK.pack(int(landmark_id), 0))
                parts.append(_f64(features))
    meta = json.dumps(dict(model.metadata), sort_keys=True).encode("utf-8")
    parts.append(_U32.pack(len(meta)))
    parts.append(meta)

    Path(path).write_bytes(b"".join(parts))
    print(f"[data] Saved {model.variant} model (q={model.landmarks.q}, "
          f"m={model.m_effective}, l={model.landmarks.l_total}) to {path}")


def load_model(path: str | Path) -> "ApncModel":
    from apnc.model import ApncModel, LandmarkBlock, Landmarks
    from kernels import KernelSpec

    data = Path(path).read_bytes()
    if data[:len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ModelFormatError("not an APNC model")
    reader = _Reader(data[len(MODEL_MAGIC):], "truncated model")

    version, q, m, l_total, d_in, discrepancy_tag = reader.unpack(_HEADER)
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    variant_tag, kind_tag, degree, sigma, offset, a, b, seed = reader.unpack(_EXTENSION)

    blocks = []
    for _ in range(q):
        rows, cols = reader.unpack(_BLOCK)
        blocks.append(reader.floats(rows * cols).reshape(rows, cols))

    landmark_blocks = []
    for _ in range(q):
        (count,) = reader.unpack(_U32)
        ids, features = [], []
        for _ in range(count):
            landmark_id, tag = reader.unpack(_LANDMARK)
            if tag == 0:
                features.append(reader.floats(d_in))
            elif tag == 1:
                (nnz,) = reader.unpack(_U32)
                indices = np.frombuffer(reader.take(4 * nnz), dtype="<u4").astype(np.int64)
                try:
                    features.append(SparseVector(indices, reader.floats(nnz), d_in))
                except ValueError as e:
                    raise ModelFormatError(f"dimension mismatch: {e}") from None
            else:
                raise ModelFormatError(f"unknown landmark tag {tag}")
            ids.append(landmark_id)
        landmark_blocks.append(LandmarkBlock(np.array(ids, dtype=np.int64), tuple(features)))

    (meta_len,) = reader.unpack(_U32)
    metadata = json.loads(reader.take(meta_len).decode("utf-8"))
    if not reader.exhausted:
        raise ModelFormatError("dimension mismatch: trailing bytes after metadata")

    if sum(R.shape[0] for R in blocks) != m:
        raise ModelFormatError("dimension mismatch: block rows do not sum to m")
    if sum(len(lb.ids) for lb in landmark_blocks) != l_total:
        raise ModelFormatError("dimension mismatch: landmark count differs from l")
    for R, lb in zip(blocks, landmark_blocks):
        if R.shape[1] != len(lb.ids):
            raise ModelFormatError("dimension mismatch: block columns differ from landmark count")

    kind = _reverse(KERNEL_TAGS, kind_tag, "kernel")
    return ApncModel(
        variant=_reverse(VARIANT_TAGS, variant_tag, "variant"),
        landmarks=Landmarks(tuple(landmark_blocks)),
        blocks=tuple(blocks),
        kernel=KernelSpec.from_stored(kind, sigma=sigma, degree=degree, offset=offset, a=a, b=b),
        discrepancy=_reverse(DISCREPANCY_TAGS, discrepancy_tag, "discrepancy"),
        seed=seed,
        d_in=d_in,
        metadata=metadata,
    )


def save_embeddings(values: np.ndarray, path: str | Path) -> None:
    """Write an n x m embedding array, one id-keyed column per instance."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    n, m = values.shape
    parts = [EMBEDDING_MAGIC, _BLOCK.pack(n, m)]
    for i in range(n):
        parts.append(_U32.pack(i))
        parts.append(_f64(values[i]))
    Path(path).write_bytes(b"".join(parts))
    print(f"[data] Saved {n} embeddings (m={m}) to {path}")


def load_embeddings(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:len(EMBEDDING_MAGIC)] != EMBEDDING_MAGIC:
        raise ModelFormatError("not an APNC embedding file")
    reader = _Reader(data[len(EMBEDDING_MAGIC):], "truncated embedding file")
    n, m = reader.unpack(_BLOCK)

    values = np.empty((n, m), dtype=np.float64)
    seen = np.zeros(n, dtype=bool)
    for _ in range(n):
        (i,) = reader.unpack(_U32)
        if i >= n or seen[i]:
            raise ModelFormatError(f"dimension mismatch: bad or repeated id {i}")
        seen[i] = True
        values[i] = reader.floats(m)
    if not reader.exhausted:
        raise ModelFormatError("dimension mismatch: trailing bytes after columns")
    return values
