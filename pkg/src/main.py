"""
APNC Toolkit - Main Entry Point

Kernel k-means at scale through approximate nearest centroid embeddings:
- coeffs:   sample landmarks and learn embedding coefficients (nystrom | stable)
- embed:    apply a model to every instance
- cluster:  Lloyd iterations over embeddings
- exact:    exact kernel k-means on the full gram (small n)
- eval:     NMI between two label files
- pipeline: repeated end-to-end experiments from a key=value config
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from apnc import ApncModel, EmbeddingMatrix, SamplingError, cluster_best_of, embed_all, fit_nystrom, fit_stable
from config import Settings, load_experiment_config, load_settings
from dataio import (
    LabelVector,
    MemoryBudgetError,
    ModelFormatError,
    ParseError,
    PartitionedDataset,
    load_dense_csv,
    load_labels,
    load_model,
    load_sparse,
    save_labels,
    save_model,
)
from engine import JobError, JobRunner
from evaluation import nmi, report_json, run_experiment
from kernels import KernelSpec, self_tune_rbf, tuning_record
from linalg import ConvergenceError, RankError
from oracle import exact_kkm, kernel_matrix

__version__ = "0.1.0"

HANDLED_ERRORS = (
    ParseError, ModelFormatError, MemoryBudgetError, ConvergenceError, RankError,
    JobError, SamplingError, ValueError, OSError,
)


class Toolkit:
    """
    APNC command orchestrator.

    Holds the settings and the job runner and appends run-log records.
    """

    def __init__(self, settings: Settings, parallelism: int | None = None, log_path: str | None = None) -> None:
        self.settings = settings
        self.runner = JobRunner(parallelism or settings.parallelism)
        self._log_path = log_path or settings.run_log
        if self._log_path:
            Path(self._log_path).write_text("", encoding="utf-8")

    def log_record(self, record: dict) -> None:
        if not self._log_path:
            return
        with open(self._log_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(record, sort_keys=True) + "\n")

    def log_job_reports(self) -> None:
        """Append every finished job's ShuffleReport to the run log."""
        self.runner.on("job_done", lambda event: self.log_record(event["report"].to_dict()))

    def load_data(
        self, path: str, fmt: str, partitions: int | None, d_in: int | None = None
    ) -> tuple[PartitionedDataset, LabelVector | None]:
        """Load dense CSV or sparse text; `d_in` pins the sparse dimension to a model's."""
        count = partitions or self.settings.partitions
        budget = self.settings.memory_budget_bytes
        if fmt == "sparse":
            return load_sparse(path, count, budget, d_in=d_in)
        return load_dense_csv(path, count, budget), None

    def kernel_from_args(
        self, args: argparse.Namespace, dataset: PartitionedDataset, seed: int
    ) -> tuple[KernelSpec, dict]:
        if args.kernel == "rbf" and args.sigma is None:
            sample = args.self_tune_sample or self.settings.self_tune_sample
            return KernelSpec.rbf(self_tune_rbf(dataset, sample, seed)), tuning_record(dataset, sample, seed)
        params: dict = {}
        for name in ("sigma", "degree", "offset", "a", "b"):
            value = getattr(args, name)
            if value is not None:
                params[name] = value
        return KernelSpec(args.kernel, **params), {}

    def coeffs(self, args: argparse.Namespace) -> int:
        self.log_job_reports()
        seed = self.settings.seed if args.seed is None else args.seed
        dataset, _ = self.load_data(args.data, args.format, args.partitions)
        kernel, tuning = self.kernel_from_args(args, dataset, seed)
        common = dict(
            eig_floor=self.settings.eig_floor,
            max_sweeps=self.settings.jacobi_max_sweeps,
            sample_retries=self.settings.sample_retries,
            runner=self.runner,
        )
        if args.variant == "nystrom":
            model = fit_nystrom(dataset, kernel, args.l, args.m, seed, **common)
        else:
            model = fit_stable(dataset, kernel, args.l, args.m, args.t, seed, **common)
        if tuning:
            model = dataclasses.replace(model, metadata={**model.metadata, **tuning})
        save_model(model, args.out)
        return 0

    def embed(self, args: argparse.Namespace) -> int:
        self.log_job_reports()
        model: ApncModel = load_model(args.model)
        dataset, _ = self.load_data(args.data, args.format, args.partitions, d_in=model.d_in)
        Y, report = embed_all(dataset, model, runner=self.runner)
        Y.save(args.out)
        print(f"[apnc] Embedding shuffle: {report.bytes_shuffled} bytes, {report.records_shuffled} records")
        return 0

    def cluster(self, args: argparse.Namespace) -> int:
        Y = EmbeddingMatrix.load(args.embeddings, args.partitions or self.settings.partitions)
        seed = self.settings.seed if args.seed is None else args.seed
        max_iters = args.max_iters or self.settings.max_iters
        restarts = 1 if args.restarts is None else args.restarts
        assignment, _, log, _ = cluster_best_of(
            Y, args.k, args.discrepancy, restarts, max_iters, seed, runner=self.runner
        )
        for entry in log:
            self.log_record(entry)
        save_labels(assignment.labels, args.out)
        print(f"[apnc] Wrote {len(assignment)} labels to {args.out}")
        return 0

    def exact(self, args: argparse.Namespace) -> int:
        seed = self.settings.seed if args.seed is None else args.seed
        dataset, _ = self.load_data(args.data, args.format, 1)
        kernel, _ = self.kernel_from_args(args, dataset, seed)
        K = kernel_matrix(kernel, dataset.features(), self.settings.kkm_cap)
        max_iters = args.max_iters or self.settings.max_iters
        assignment, log = exact_kkm(K, args.k, max_iters, seed, cap=self.settings.kkm_cap)
        for entry in log:
            self.log_record(entry)
        save_labels(assignment.labels, args.out)
        return 0

    def evaluate(self, args: argparse.Namespace) -> int:
        pred = load_labels(args.pred)
        truth = load_labels(args.truth)
        print(json.dumps({"nmi": nmi(pred, truth), "normalization": "geometric"}, sort_keys=True))
        return 0

    def pipeline(self, args: argparse.Namespace) -> int:
        raw = load_experiment_config(args.config)
        report = run_experiment(raw, self.settings)
        text = report_json(report)
        if args.out:
            Path(args.out).write_text(text + "\n", encoding="utf-8")
            print(f"[apnc] Report written to {args.out}")
        else:
            print(text)
        return 0


def _add_kernel_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--kernel", choices=["rbf", "polynomial", "neural", "linear"], default="rbf")
    parser.add_argument("--sigma", type=float, help="rbf bandwidth; self-tuned when omitted")
    parser.add_argument("--degree", type=int)
    parser.add_argument("--offset", type=float)
    parser.add_argument("--a", type=float)
    parser.add_argument("--b", type=float)
    parser.add_argument("--self-tune-sample", type=int)


def _add_data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True)
    parser.add_argument("--format", choices=["dense", "sparse"], default="dense")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apnc", description="APNC kernel k-means toolkit")
    parser.add_argument("--version", action="version", version=f"apnc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="learn an embedding model")
    _add_data_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--variant", choices=["nystrom", "stable"], required=True)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--t", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--partitions", type=int)
    p.add_argument("--log")

    p = sub.add_parser("embed", help="embed a dataset with a model")
    p.add_argument("--model", required=True)
    _add_data_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--partitions", type=int)
    p.add_argument("--log")

    p = sub.add_parser("cluster", help="cluster an embedding file")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--discrepancy", choices=["l2", "l1"], default="l2")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--restarts", type=int, help="seeded inits to try; the lowest final objective wins")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int)
    p.add_argument("--partitions", type=int)
    p.add_argument("--log")

    p = sub.add_parser("exact", help="exact kernel k-means")
    _add_data_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--log")

    p = sub.add_parser("eval", help="NMI between predicted and true labels")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)

    p = sub.add_parser("pipeline", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    return parser


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings()
        toolkit = Toolkit(settings, getattr(args, "parallelism", None), getattr(args, "log", None))
        handlers = {
            "coeffs": toolkit.coeffs,
            "embed": toolkit.embed,
            "cluster": toolkit.cluster,
            "exact": toolkit.exact,
            "eval": toolkit.evaluate,
            "pipeline": toolkit.pipeline,
        }
        return handlers[args.command](args)
    except HANDLED_ERRORS as e:
        print(f"[apnc_error] {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
