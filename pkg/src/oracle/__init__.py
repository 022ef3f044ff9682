"""Oracle module - Exact kernel k-means on the full gram matrix."""

from .exact_kkm import DEFAULT_CAP, KernelMatrix, exact_kkm, kernel_matrix

__all__ = ["DEFAULT_CAP", "KernelMatrix", "exact_kkm", "kernel_matrix"]
