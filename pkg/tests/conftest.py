from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from dataio import PartitionedDataset  # noqa: E402


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def small_points(rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((40, 3))


@pytest.fixture
def small_dataset(small_points: np.ndarray) -> PartitionedDataset:
    return PartitionedDataset.from_array(small_points, partition_count=4)


@pytest.fixture
def two_blobs(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """30 points in two well-separated 2-D groups, with their labels."""
    a = rng.normal(0.0, 0.5, size=(15, 2))
    b = rng.normal(0.0, 0.5, size=(15, 2)) + np.array([6.0, 6.0])
    X = np.vstack([a, b])
    y = np.array([0] * 15 + [1] * 15)
    return X, y


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    for name in (
        "APNC_PARALLELISM", "APNC_PARTITIONS", "APNC_MEMORY_BUDGET_BYTES", "APNC_EIG_FLOOR",
        "APNC_JACOBI_MAX_SWEEPS", "APNC_KKM_CAP", "APNC_MAX_ITERS", "APNC_SEED",
        "APNC_SAMPLE_RETRIES", "APNC_SELF_TUNE_SAMPLE", "APNC_RUN_LOG",
    ):
        monkeypatch.delenv(name, raising=False)
    # keep load_dotenv() from picking up a developer's .env
    monkeypatch.chdir(tmp_path)
