"""APNC module - Embedding coefficients, blockwise embedding and clustering."""

from .model import ApncModel, LandmarkBlock, Landmarks, SamplingError
from .coeffs import default_t, fit_nystrom, fit_stable, nystrom_error, sample_landmarks
from .embed import EmbeddingMatrix, embed_all, embed_one
from .policy import best_restart, farthest, initial_ids, nearest, restart_seed
from .cluster import (
    Assignment,
    CentroidSet,
    LocalAggregate,
    cluster_best_of,
    cluster_iterate,
    cluster_run,
    discrepancy,
    distance_table,
    init_centroids,
)

__all__ = [
    "ApncModel", "LandmarkBlock", "Landmarks", "SamplingError",
    "default_t", "fit_nystrom", "fit_stable", "nystrom_error", "sample_landmarks",
    "EmbeddingMatrix", "embed_all", "embed_one",
    "best_restart", "farthest", "initial_ids", "nearest", "restart_seed",
    "Assignment", "CentroidSet", "LocalAggregate",
    "cluster_best_of", "cluster_iterate", "cluster_run", "discrepancy", "distance_table", "init_centroids",
]
