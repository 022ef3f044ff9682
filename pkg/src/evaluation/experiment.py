"""
Experiment - Repeated coeffs -> embed -> cluster -> NMI runs with a JSON report.

The report is a pure function of the config and seeds unless timings are
requested, so re-running a config reproduces it byte for byte.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from apnc import best_restart, cluster_best_of, default_t, embed_all, fit_nystrom, fit_stable, restart_seed
from config import EXPERIMENT_KEYS, Settings
from dataio import LabelVector, PartitionedDataset, load_dense_csv, load_labels, load_sparse
from engine import JobRunner
from kernels import KernelSpec, self_tune_rbf, tuning_record
from oracle import exact_kkm, kernel_matrix
from .metrics import NORMALIZATION, nmi
from .synthetic import make_blobs_dataset

VARIANT_NAMES = ("nystrom", "stable")


def _flag(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _int_list(value: str) -> list[int]:
    return [int(part) for part in value.split(",") if part.strip()]


@dataclass
class ExperimentConfig:
    variants: list[str]
    k: int
    l_values: list[int]
    m: int
    t: int | None = None
    max_iters: int = 20
    restarts: int = 1
    seeds: list[int] = field(default_factory=lambda: [0])
    parallelism: int = 1
    partitions: int = 4
    exact: bool = False
    timings: bool = False
    kernel: Mapping[str, str] = field(default_factory=dict)
    data: str | None = None
    labels: str | None = None
    format: str = "dense"
    synthetic: str | None = None
    blobs: Mapping[str, str] = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, str], settings: Settings | None = None) -> "ExperimentConfig":
        unknown = set(raw) - EXPERIMENT_KEYS
        if unknown:
            raise ValueError(f"unknown experiment key: {sorted(unknown)[0]}")
        try:
            variants = [v.strip() for v in raw.get("variant", "nystrom").split(",") if v.strip()]
            for v in variants:
                if v not in VARIANT_NAMES:
                    raise ValueError(f"unknown variant {v!r}")
            if "k" not in raw or "m" not in raw:
                raise ValueError("experiment config needs k and m")
            if "l_sweep" in raw:
                l_values = _int_list(raw["l_sweep"])
            elif "l" in raw:
                l_values = [int(raw["l"])]
            else:
                raise ValueError("experiment config needs l or l_sweep")

            if "seeds" in raw:
                seeds = _int_list(raw["seeds"])
                if "repeats" in raw and int(raw["repeats"]) != len(seeds):
                    raise ValueError(f"repeats={raw['repeats']} but {len(seeds)} seeds listed")
            else:
                base = settings.seed if settings else 0
                seeds = [base + i for i in range(int(raw.get("repeats", "1")))]
            if not seeds:
                raise ValueError("experiment needs at least one seed")

            config = cls(
                variants=variants,
                k=int(raw["k"]),
                l_values=l_values,
                m=int(raw["m"]),
                t=int(raw["t"]) if raw.get("t") else None,
                max_iters=int(raw.get("max_iters", str(settings.max_iters if settings else 20))),
                restarts=int(raw.get("restarts", "1")),
                seeds=seeds,
                parallelism=int(raw.get("parallelism", str(settings.parallelism if settings else 1))),
                partitions=int(raw.get("partitions", str(settings.partitions if settings else 4))),
                exact=_flag(raw.get("exact", "false")),
                timings=_flag(raw.get("timings", "false")),
                kernel={key: v for key, v in raw.items() if key.startswith("kernel.")},
                data=raw.get("data") or None,
                labels=raw.get("labels") or None,
                format=raw.get("format", "dense"),
                synthetic=raw.get("synthetic") or None,
                blobs={key: v for key, v in raw.items() if key.startswith("blobs.")},
            )
        except (TypeError, KeyError) as e:
            raise ValueError(f"bad experiment config: {e}") from None
        if config.data is None and config.synthetic is None:
            raise ValueError("experiment config needs data or synthetic")
        if config.synthetic not in (None, "blobs"):
            raise ValueError(f"unknown synthetic dataset {config.synthetic!r}")
        if config.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {config.restarts}")
        if config.format not in ("dense", "sparse"):
            raise ValueError(f"unknown format {config.format!r}")
        return config

    def describe(self) -> dict:
        return {
            "variants": self.variants,
            "k": self.k,
            "l": self.l_values,
            "m": self.m,
            "t": self.t,
            "max_iters": self.max_iters,
            "restarts": self.restarts,
            "seeds": self.seeds,
            "partitions": self.partitions,
            "exact": self.exact,
            "kernel": dict(sorted(self.kernel.items())),
            "data": self.data or self.synthetic,
        }


def load_experiment_data(config: ExperimentConfig, memory_budget_bytes: int | None = None) -> tuple[PartitionedDataset, LabelVector]:
    if config.synthetic == "blobs":
        b = config.blobs
        return make_blobs_dataset(
            n=int(b.get("blobs.n", "3000")),
            d=int(b.get("blobs.d", "10")),
            k=int(b.get("blobs.k", str(config.k))),
            separation=float(b.get("blobs.separation", "6.0")),
            std=float(b.get("blobs.std", "1.0")),
            seed=int(b.get("blobs.seed", "0")),
            partition_count=config.partitions,
            memory_budget_bytes=memory_budget_bytes,
        )
    if config.format == "sparse":
        dataset, labels = load_sparse(config.data, config.partitions, memory_budget_bytes)
        if config.labels:
            labels = load_labels(config.labels)
        return dataset, labels
    dataset = load_dense_csv(config.data, config.partitions, memory_budget_bytes)
    if not config.labels:
        raise ValueError("dense data needs a labels file for evaluation")
    return dataset, load_labels(config.labels)


def _resolve_kernel(
    config: ExperimentConfig, dataset: PartitionedDataset, settings: Settings | None
) -> tuple[KernelSpec, dict]:
    """The experiment kernel plus how its sigma was obtained (empty unless self-tuned)."""
    kind = config.kernel.get("kernel.kind", "rbf")
    if kind == "rbf" and "kernel.sigma" not in config.kernel:
        sample = int(config.kernel.get(
            "kernel.self_tune_sample", str(settings.self_tune_sample if settings else 1000)
        ))
        sigma = self_tune_rbf(dataset, sample, config.seeds[0])
        return KernelSpec.rbf(sigma), tuning_record(dataset, sample, config.seeds[0])
    return KernelSpec.from_config(config.kernel), {}


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.array(values, dtype=np.float64)
    return float(np.mean(arr)), float(np.std(arr))


@dataclass
class _RepeatResult:
    seed: int
    nmi: float | None = None
    iterations: int = 0
    shuffle_bytes: int = 0
    m_effective: int = 0
    error: str | None = None
    seconds: dict = field(default_factory=dict)


def _run_repeat(
    variant: str,
    l: int,
    seed: int,
    config: ExperimentConfig,
    kernel: KernelSpec,
    dataset: PartitionedDataset,
    truth: LabelVector,
    settings: Settings | None,
) -> _RepeatResult:
    result = _RepeatResult(seed=seed)
    runner = JobRunner(config.parallelism)
    eig_floor = settings.eig_floor if settings else 1e-10
    retries = settings.sample_retries if settings else 5
    try:
        started = time.perf_counter()
        if variant == "nystrom":
            model = fit_nystrom(dataset, kernel, l, config.m, seed,
                                eig_floor=eig_floor, sample_retries=retries, runner=runner)
        else:
            t = config.t if config.t is not None else default_t(l)
            model = fit_stable(dataset, kernel, l, config.m, t, seed,
                               eig_floor=eig_floor, sample_retries=retries, runner=runner)
        fitted = time.perf_counter()
        Y, embed_report = embed_all(dataset, model, runner=runner)
        embedded = time.perf_counter()
        assignment, _, log, summary = cluster_best_of(
            Y, config.k, model.discrepancy, config.restarts, config.max_iters, seed, runner=runner
        )
        clustered = time.perf_counter()

        result.nmi = nmi(assignment, truth)
        result.iterations = len(log)
        result.m_effective = model.m_effective
        result.shuffle_bytes = embed_report.bytes_shuffled + summary["shuffle_bytes"]
        result.seconds = {
            "coeffs": fitted - started,
            "embed": embedded - fitted,
            "cluster": clustered - embedded,
        }
    except Exception as e:
        print(f"[eval_error] {variant} l={l} seed={seed}: {e}")
        result.error = f"{type(e).__name__}: {e}"
    return result


def _row(name: str, results: list[_RepeatResult], timings: bool, **extra: Any) -> dict:
    done = [r for r in results if r.error is None]
    mean, std = _mean_std([r.nmi for r in done])
    row = {
        "method": name,
        **extra,
        "completed": len(done),
        "nmi_mean": mean,
        "nmi_std": std,
        "nmi_values": [r.nmi for r in done],
        "iterations_mean": _mean_std([float(r.iterations) for r in done])[0],
        "shuffle_bytes_total": sum(r.shuffle_bytes for r in done),
        "failures": [{"seed": r.seed, "error": r.error} for r in results if r.error is not None],
    }
    if done and any(r.m_effective for r in done):
        row["m_effective"] = [r.m_effective for r in done]
    if timings:
        row["seconds"] = [r.seconds for r in done]
    return row


def run_experiment(
    raw: Mapping[str, str] | ExperimentConfig,
    settings: Settings | None = None,
    data: tuple[PartitionedDataset, LabelVector] | None = None,
) -> dict:
    config = raw if isinstance(raw, ExperimentConfig) else ExperimentConfig.from_mapping(raw, settings)
    if data is None:
        data = load_experiment_data(config, settings.memory_budget_bytes if settings else None)
    dataset, truth = data
    if len(truth) != dataset.n:
        raise ValueError(f"{len(truth)} labels for {dataset.n} instances")
    kernel, tuning = _resolve_kernel(config, dataset, settings)

    rows = []
    for l in config.l_values:
        for variant in config.variants:
            print(f"[eval] {variant} l={l} m={config.m} over {len(config.seeds)} seed(s)")

            def one(seed: int, variant: str = variant, l: int = l) -> _RepeatResult:
                return _run_repeat(variant, l, seed, config, kernel, dataset, truth, settings)

            if config.parallelism > 1 and len(config.seeds) > 1:
                with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
                    results = list(pool.map(one, config.seeds))
            else:
                results = [one(seed) for seed in config.seeds]

            t = None
            if variant == "stable":
                t = config.t if config.t is not None else default_t(l)
            rows.append(_row(f"apnc-{variant}", results, config.timings, variant=variant, l=l, m=config.m, t=t))

    if config.exact:
        rows.append(_exact_row(config, kernel, dataset, truth, settings))

    report = {
        "config": config.describe(),
        "dataset": {"n": dataset.n, "d_in": dataset.d_in, "classes": int(np.unique(truth.labels).size)},
        "kernel": {**kernel.describe(), **tuning},
        "nmi_normalization": NORMALIZATION,
        "rows": rows,
    }
    for row in rows:
        if row["nmi_mean"] is not None:
            print(f"[eval] {row['method']}: NMI {row['nmi_mean']:.4f} +/- {row['nmi_std']:.4f} "
                  f"({row['completed']}/{len(config.seeds)} runs)")
    return report


def _exact_row(
    config: ExperimentConfig,
    kernel: KernelSpec,
    dataset: PartitionedDataset,
    truth: LabelVector,
    settings: Settings | None,
) -> dict:
    cap = settings.kkm_cap if settings else 5000
    results = []
    try:
        K = kernel_matrix(kernel, dataset.features(), cap)
    except Exception as e:
        print(f"[eval_error] exact kernel k-means skipped: {e}")
        return _row("exact-kkm", [_RepeatResult(seed=s, error=f"{type(e).__name__}: {e}") for s in config.seeds], False)
    for seed in config.seeds:
        result = _RepeatResult(seed=seed)
        try:
            started = time.perf_counter()
            runs = [
                exact_kkm(K, config.k, config.max_iters, restart_seed(seed, r), cap=cap)
                for r in range(config.restarts)
            ]
            assignment, log = runs[best_restart([run_log[-1]["objective"] for _, run_log in runs])]
            result.nmi = nmi(assignment, truth)
            result.iterations = len(log)
            result.seconds = {"cluster": time.perf_counter() - started}
        except Exception as e:
            print(f"[eval_error] exact seed={seed}: {e}")
            result.error = f"{type(e).__name__}: {e}"
        results.append(result)
    return _row("exact-kkm", results, config.timings)


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)
