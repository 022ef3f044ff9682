"""Engine module - In-process map/reduce with metered shuffle."""

from .job import (
    FunctionMapper,
    InputSplit,
    JobError,
    Mapper,
    MrJob,
    ShuffleReport,
    TaskContext,
    job_id_for,
    key_nbytes,
    payload_nbytes,
    seal,
    side_nbytes,
    task_rng,
)
from .runner import JobOutput, JobRunner, as_splits, run_chain, run_job

__all__ = [
    "FunctionMapper", "InputSplit", "JobError", "Mapper", "MrJob",
    "ShuffleReport", "TaskContext",
    "job_id_for", "key_nbytes", "payload_nbytes", "seal", "side_nbytes", "task_rng",
    "JobOutput", "JobRunner", "as_splits", "run_chain", "run_job",
]
