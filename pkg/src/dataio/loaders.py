"""
Loaders - Text dataset and label formats.

Dense CSV: one instance per line, comma-separated floats, no label column.
Sparse: libsvm-style "label idx:val idx:val ..." with 1-based ascending indices.
Labels: one integer per line, or "id<TAB>label" lines.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .records import LabelVector, PartitionedDataset, SparseVector


class ParseError(ValueError):
    """Malformed text input; `line` is 1-based (0 when the whole file is at fault)."""

    def __init__(self, message: str, line: int = 0) -> None:
        self.line = line
        self.reason = message
        super().__init__(f"line {line}: {message}" if line else message)


def _parse_float(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"malformed number {token!r}", line_no) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {token!r}", line_no)
    return value


def _read_lines(path: str | Path) -> list[tuple[int, str]]:
    """Non-blank lines with their 1-based numbers."""
    with open(path, "r", encoding="utf-8") as f:
        return [
            (number, line.strip())
            for number, line in enumerate(f, start=1)
            if line.strip()
        ]


def load_dense_csv(
    path: str | Path,
    partition_count: int = 1,
    memory_budget_bytes: int | None = None,
) -> PartitionedDataset:
    lines = _read_lines(path)
    if not lines:
        raise ParseError("empty dataset")

    rows: list[np.ndarray] = []
    width = None
    for line_no, line in lines:
        fields = line.split(",")
        if width is None:
            width = len(fields)
        elif len(fields) != width:
            raise ParseError(f"ragged row: expected {width} fields, got {len(fields)}", line_no)
        rows.append(np.array([_parse_float(t.strip(), line_no) for t in fields], dtype=np.float64))

    dataset = PartitionedDataset.from_features(rows, width, partition_count, memory_budget_bytes)
    print(f"[data] Loaded {dataset.n} dense instances (d_in={dataset.d_in}, "
          f"{dataset.partition_count} block(s)) from {path}")
    return dataset


def _parse_label(token: str, line_no: int) -> int:
    value = _parse_float(token, line_no)
    if value != int(value):
        raise ParseError(f"non-integer label {token!r}", line_no)
    return int(value)


def load_sparse(
    path: str | Path,
    partition_count: int = 1,
    memory_budget_bytes: int | None = None,
    d_in: int | None = None,
) -> tuple[PartitionedDataset, LabelVector]:
    lines = _read_lines(path)
    if not lines:
        raise ParseError("empty dataset")

    labels: list[int] = []
    parsed: list[tuple[np.ndarray, np.ndarray]] = []
    max_index = 0
    for line_no, line in lines:
        tokens = line.split()
        labels.append(_parse_label(tokens[0], line_no))
        indices = np.empty(len(tokens) - 1, dtype=np.int64)
        values = np.empty(len(tokens) - 1, dtype=np.float64)
        previous = 0
        for j, token in enumerate(tokens[1:]):
            idx_text, sep, val_text = token.partition(":")
            if not sep:
                raise ParseError(f"expected idx:val, got {token!r}", line_no)
            try:
                idx = int(idx_text)
            except ValueError:
                raise ParseError(f"malformed index {idx_text!r}", line_no) from None
            if idx < 1:
                raise ParseError(f"index {idx} is not 1-based", line_no)
            if idx <= previous:
                raise ParseError("indices not ascending", line_no)
            previous = idx
            indices[j] = idx - 1
            values[j] = _parse_float(val_text, line_no)
        max_index = max(max_index, previous)
        parsed.append((indices, values))

    if d_in is None:
        d_in = max_index
    elif max_index > d_in:
        raise ParseError(f"index {max_index} exceeds declared dimension {d_in}")

    features = [SparseVector(indices, values, d_in) for indices, values in parsed]
    dataset = PartitionedDataset.from_features(features, d_in, partition_count, memory_budget_bytes)
    label_vector = LabelVector(_reindex_if_negative(np.array(labels, dtype=np.int64)))
    print(f"[data] Loaded {dataset.n} sparse instances (d_in={d_in}, "
          f"{dataset.partition_count} block(s)) from {path}")
    return dataset, label_vector


def _reindex_if_negative(labels: np.ndarray) -> np.ndarray:
    # libsvm binary sets use -1/+1; class ids must be non-negative
    if labels.size and labels.min() < 0:
        classes, inverse = np.unique(labels, return_inverse=True)
        print(f"[data] Re-indexed labels {classes.tolist()} to 0..{classes.size - 1}")
        return inverse.astype(np.int64)
    return labels


def load_labels(path: str | Path) -> LabelVector:
    """Read labels from "label" or "id<TAB>label" lines; ids must cover 0..n-1."""
    lines = _read_lines(path)
    if not lines:
        raise ParseError("empty label file")

    keyed: dict[int, int] = {}
    plain: list[int] = []
    for line_no, line in lines:
        fields = line.split()
        if len(fields) == 1:
            plain.append(_parse_label(fields[0], line_no))
        elif len(fields) == 2:
            key = _parse_label(fields[0], line_no)
            if key in keyed:
                raise ParseError(f"duplicate id {key}", line_no)
            keyed[key] = _parse_label(fields[1], line_no)
        else:
            raise ParseError(f"expected 1 or 2 fields, got {len(fields)}", line_no)
        if plain and keyed:
            raise ParseError("mixed plain and id<TAB>label lines", line_no)

    if plain:
        return LabelVector(_reindex_if_negative(np.array(plain, dtype=np.int64)))

    n = len(keyed)
    if sorted(keyed) != list(range(n)):
        raise ParseError(f"label ids do not cover 0..{n - 1}")
    return LabelVector(_reindex_if_negative(np.array([keyed[i] for i in range(n)], dtype=np.int64)))


def save_labels(labels: np.ndarray | LabelVector, path: str | Path) -> None:
    """Write one "id<TAB>cluster" line per instance."""
    values = labels.labels if isinstance(labels, LabelVector) else np.asarray(labels)
    with open(path, "w", encoding="utf-8") as f:
        for i, label in enumerate(values.tolist()):
            f.write(f"{i}\t{label}\n")
