"""Evaluation module - NMI, synthetic blobs and the experiment harness."""

from .metrics import NORMALIZATION, ContingencyTable, mutual_information, nmi
from .synthetic import blob_centers, make_blobs_dataset
from .experiment import ExperimentConfig, load_experiment_data, report_json, run_experiment

__all__ = [
    "NORMALIZATION", "ContingencyTable", "mutual_information", "nmi",
    "blob_centers", "make_blobs_dataset",
    "ExperimentConfig", "load_experiment_data", "report_json", "run_experiment",
]
