"""Linalg module - Symmetric eigensolver, whitening and fixed-order products."""

from .eigen import (
    DEFAULT_EIG_FLOOR,
    ConvergenceError,
    EigenResult,
    RankError,
    centering_matrix,
    check_finite,
    inv_sqrt_factor,
    inv_sqrt_psd,
    retained_eigen,
    round_robin_pairs,
    sym_eigen,
)
from .ordered import ordered_matmul, ordered_matvec

__all__ = [
    "DEFAULT_EIG_FLOOR", "ConvergenceError", "EigenResult", "RankError",
    "centering_matrix", "check_finite", "inv_sqrt_factor", "inv_sqrt_psd",
    "retained_eigen", "round_robin_pairs", "sym_eigen",
    "ordered_matmul", "ordered_matvec",
]
