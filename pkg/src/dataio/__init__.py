"""Dataio module - Datasets, labels, models and embeddings on disk."""

from .records import (
    Block,
    Features,
    Instance,
    LabelVector,
    MemoryBudgetError,
    PartitionedDataset,
    SparseVector,
    as_dense,
    block_ranges,
    feature_dim,
    feature_nbytes,
)
from .loaders import ParseError, load_dense_csv, load_labels, load_sparse, save_labels
from .formats import (
    ModelFormatError,
    load_embeddings,
    load_model,
    save_embeddings,
    save_model,
)

__all__ = [
    "Block", "Features", "Instance", "LabelVector", "MemoryBudgetError",
    "PartitionedDataset", "SparseVector",
    "as_dense", "block_ranges", "feature_dim", "feature_nbytes",
    "ParseError", "load_dense_csv", "load_labels", "load_sparse", "save_labels",
    "ModelFormatError", "load_embeddings", "load_model", "save_embeddings", "save_model",
]
