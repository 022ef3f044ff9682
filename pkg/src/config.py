from __future__ import annotations

from dataclasses import dataclass
import os

from dotenv import dotenv_values, load_dotenv


@dataclass
class Settings:
    parallelism: int
    partitions: int
    memory_budget_bytes: int
    eig_floor: float
    jacobi_max_sweeps: int
    kkm_cap: int
    max_iters: int
    seed: int
    sample_retries: int
    self_tune_sample: int
    run_log: str | None


def _int_env(name: str, default: str, minimum: int) -> int:
    raw = os.getenv(name, default).strip()
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def load_settings() -> Settings:
    load_dotenv()

    eig_floor_raw = os.getenv("APNC_EIG_FLOOR", "1e-10").strip()
    try:
        eig_floor = float(eig_floor_raw)
    except ValueError:
        raise ValueError(f"APNC_EIG_FLOOR must be a number, got {eig_floor_raw!r}") from None
    if eig_floor < 0:
        raise ValueError("APNC_EIG_FLOOR must be non-negative")

    budget = _int_env("APNC_MEMORY_BUDGET_BYTES", "268435456", 1)

    run_log = os.getenv("APNC_RUN_LOG", "").strip() or None

    return Settings(
        parallelism=_int_env("APNC_PARALLELISM", "1", 1),
        partitions=_int_env("APNC_PARTITIONS", "4", 1),
        memory_budget_bytes=budget,
        eig_floor=eig_floor,
        jacobi_max_sweeps=_int_env("APNC_JACOBI_MAX_SWEEPS", "100", 1),
        kkm_cap=_int_env("APNC_KKM_CAP", "5000", 1),
        max_iters=_int_env("APNC_MAX_ITERS", "20", 1),
        seed=_int_env("APNC_SEED", "0", 0),
        sample_retries=_int_env("APNC_SAMPLE_RETRIES", "5", 0),
        self_tune_sample=_int_env("APNC_SELF_TUNE_SAMPLE", "1000", 2),
        run_log=run_log,
    )


# Keys accepted in experiment config files; they mirror the CLI flags.
EXPERIMENT_KEYS = frozenset({
    "data", "labels", "format", "synthetic", "restarts",
    "kernel.kind", "kernel.sigma", "kernel.degree", "kernel.offset",
    "kernel.a", "kernel.b", "kernel.self_tune_sample",
    "variant", "l", "m", "t", "k", "max_iters",
    "repeats", "seeds", "parallelism", "partitions",
    "exact", "timings", "l_sweep",
    "blobs.n", "blobs.d", "blobs.k", "blobs.separation", "blobs.std", "blobs.seed",
})


def load_experiment_config(path: str) -> dict[str, str]:
    """Read a flat key=value experiment file (comments and quoting as in .env files)."""
    if not os.path.exists(path):
        raise ValueError(f"experiment config not found: {path}")
    raw = dotenv_values(path)
    config: dict[str, str] = {}
    for key, value in raw.items():
        if key not in EXPERIMENT_KEYS:
            raise ValueError(f"unknown experiment key: {key}")
        config[key] = (value or "").strip()
    return config
