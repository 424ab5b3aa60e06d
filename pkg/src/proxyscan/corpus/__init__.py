"""Verified-source fetching, batch runs and detector comparison."""

from .baseline import baseline_name_heuristic
from .batch import BatchConfig, BatchReport, run_batch
from .compare import FpFnStats, LabelFileError, MissingLabel, compare_detectors, load_ground_truth
from .fetch import (
    ExplorerClient, FetchError, NotVerified, RateLimited, SourceBundle, SourceCache, TransportError,
    fetch_verified_source, normalize_address,
)

__all__ = [
    "BatchConfig", "BatchReport", "ExplorerClient", "FetchError", "FpFnStats", "LabelFileError", "MissingLabel",
    "NotVerified", "RateLimited", "SourceBundle", "SourceCache", "TransportError", "baseline_name_heuristic",
    "compare_detectors", "fetch_verified_source", "load_ground_truth", "normalize_address", "run_batch",
]
