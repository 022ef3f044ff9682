"""Kernels module - Kernel evaluation on pairs, landmark blocks and gram matrices."""

from .functions import (
    KINDS,
    FeatureStack,
    KernelSpec,
    as_stack,
    kernel_block,
    kernel_gram,
    kernel_pair,
    sqdist,
)
from .tuning import self_tune_rbf, tuning_record

__all__ = [
    "KINDS", "FeatureStack", "KernelSpec", "as_stack",
    "kernel_block", "kernel_gram", "kernel_pair", "sqdist",
    "self_tune_rbf", "tuning_record",
]
