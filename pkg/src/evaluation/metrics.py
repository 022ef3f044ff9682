"""Metrics - Contingency tables and normalized mutual information."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.metrics import mutual_info_score, normalized_mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from dataio.records import LabelVector

NORMALIZATION = "geometric"


def _as_labels(labels) -> np.ndarray:
    if isinstance(labels, LabelVector):
        return labels.labels
    if hasattr(labels, "labels"):
        return np.asarray(labels.labels, dtype=np.int64)
    return np.asarray(labels, dtype=np.int64)


def _checked(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    pred = _as_labels(pred)
    truth = _as_labels(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} labels")
    if pred.size == 0:
        raise ValueError("nmi needs at least one instance")
    return pred, truth


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """counts[c, t]: instances in cluster c with true class t (both re-indexed densely)."""

    counts: np.ndarray

    @classmethod
    def from_labels(cls, pred, truth) -> "ContingencyTable":
        pred, truth = _checked(pred, truth)
        return cls(np.asarray(contingency_matrix(pred, truth), dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def cluster_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def class_sizes(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def degenerate(self) -> bool:
        """One cluster or one class, so one side has zero entropy."""
        return self.counts.shape[0] < 2 or self.counts.shape[1] < 2


def mutual_information(table: ContingencyTable) -> float:
    """I(clusters; classes) in nats."""
    return float(mutual_info_score(None, None, contingency=table.counts))


def nmi(pred, truth) -> float:
    """I(pred; truth) / sqrt(H(pred) H(truth)), natural logs; 0 when either entropy is 0."""
    pred, truth = _checked(pred, truth)
    # sklearn scores two single-cluster labelings as 1.0
    if ContingencyTable.from_labels(pred, truth).degenerate:
        return 0.0
    value = normalized_mutual_info_score(truth, pred, average_method=NORMALIZATION)
    return min(1.0, max(0.0, float(value)))
