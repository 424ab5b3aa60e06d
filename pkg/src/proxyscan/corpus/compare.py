"""Compare the improved detector with the name-based baseline against labels."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

if TYPE_CHECKING:
    from .batch import BatchReport

LABELS = ("upgradeable", "proxy_only", "not_proxy")

# Context for the comparison, not a target value.
FIELD_MOTIVATION = (
    "In large-scale measurements about 70% of contracts flagged by a name-based "
    "proxy detector were not upgradeable proxies. This corpus checks the mechanism "
    "that removes such false positives."
)


class MissingLabel(KeyError):
    """A report record has no ground-truth entry."""


class LabelFileError(ValueError):
    """Malformed ground-truth file."""


@dataclass(frozen=True)
class FpFnStats:
    baseline_flagged: int
    improved_flagged: int
    baseline_fp: int
    eliminated_fp: int
    eliminated_fp_ratio: float
    missed_tp: int
    true_upgradeable: int
    improved_fp: int
    zero_denominator: bool

    def __post_init__(self):
        if not 0.0 <= self.eliminated_fp_ratio <= 1.0:
            raise ValueError("eliminated_fp_ratio must be within [0, 1]")

    def to_dict(self) -> dict:
        return {
            "baseline_flagged": self.baseline_flagged,
            "improved_flagged": self.improved_flagged,
            "baseline_fp": self.baseline_fp,
            "eliminated_fp": self.eliminated_fp,
            "eliminated_fp_ratio": self.eliminated_fp_ratio,
            "baseline_fp_zero": self.zero_denominator,
            "missed_tp": self.missed_tp,
            "true_upgradeable": self.true_upgradeable,
            "improved_fp": self.improved_fp,
            "motivation": FIELD_MOTIVATION,
        }

    def summary(self) -> str:
        ratio = f"{self.eliminated_fp_ratio:.3f}"
        if self.zero_denominator:
            ratio += " (baseline_fp=0)"
        return (f"baseline flagged {self.baseline_flagged}, improved flagged {self.improved_flagged}, "
                f"baseline FPs {self.baseline_fp}, eliminated {self.eliminated_fp}, "
                f"eliminated_fp_ratio {ratio}, missed TPs {self.missed_tp}")


def load_ground_truth(path: str) -> dict[tuple[str, str], str]:
    """Read ``source,contract,label`` lines.  Blank lines and ``#`` comments are skipped.

    :raises LabelFileError: wrong column count, unknown label or duplicate key
    """
    truth: dict[tuple[str, str], str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 3:
                raise LabelFileError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            source, contract, label = (c.strip() for c in row)
            if label not in LABELS:
                raise LabelFileError(f"{path}:{lineno}: unknown label {label!r}")
            key = (_normalize_source(source), contract)
            if key in truth:
                raise LabelFileError(f"{path}:{lineno}: duplicate entry for {source},{contract}")
            truth[key] = label
    return truth


def _normalize_source(source: str) -> str:
    if source.lower().startswith("0x"):
        return source.lower()
    return source.replace("\\", "/")


def compare_detectors(report: Union["BatchReport", dict], ground_truth: dict[tuple[str, str], str]) -> FpFnStats:
    """Count baseline and improved flags against ``ground_truth``.

    Error records are not analyzed and are skipped.  When the baseline has no
    false positives the ratio is reported as 1.0 with ``zero_denominator`` set.

    :raises MissingLabel: an analyzed record has no label
    """
    records = report["records"] if isinstance(report, dict) else report.records
    baseline_flagged = improved_flagged = baseline_fp = eliminated = missed = true_up = improved_fp = 0
    for rec in records:
        if rec["status"] != "ok":
            continue
        key = (_normalize_source(rec["source"]), rec["contract"])
        if key not in ground_truth:
            raise MissingLabel(f"no ground-truth label for {rec['source']},{rec['contract']}")
        upgradeable = ground_truth[key] == "upgradeable"
        base = bool(rec["baseline_flagged"])
        improved = bool(rec["verdict"]["is_upgradeable"])
        baseline_flagged += base
        improved_flagged += improved
        true_up += upgradeable
        if base and not upgradeable:
            baseline_fp += 1
            if not improved:
                eliminated += 1
        if improved and not upgradeable:
            improved_fp += 1
        if upgradeable and not improved:
            missed += 1
    zero = baseline_fp == 0
    ratio = 1.0 if zero else eliminated / baseline_fp
    return FpFnStats(baseline_flagged, improved_flagged, baseline_fp, eliminated, ratio, missed, true_up,
                     improved_fp, zero)
