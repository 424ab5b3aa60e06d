"""Batch analysis over local Solidity trees and fetched addresses."""

from __future__ import annotations

import json
import logging
import os
import posixpath
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .. import __version__
from ..analysis import analyze_unit
from ..frontend import ParseError, parse_source
from ..frontend.ast import Version
from ..frontend.pragma import parse_version
from ..model import resolve_compilation_unit
from .baseline import baseline_name_heuristic
from .fetch import ExplorerClient, FetchError, SourceCache, normalize_address

logger = logging.getLogger("proxyscan.corpus")

REPORT_SCHEMA_VERSION = 1


@dataclass
class BatchConfig:
    """
    :param jobs: worker processes for local files; 1 runs in-process
    :param compiler_version: overrides pragmas when choosing the assembly representation
    """

    jobs: int = 1
    compiler_version: Optional[Version] = None


@dataclass
class BatchReport:
    records: list[dict] = field(default_factory=list)
    tool_version: str = __version__
    comparison: Optional[dict] = None

    def sort(self) -> None:
        self.records.sort(key=record_key)

    @property
    def ok_records(self) -> list[dict]:
        return [r for r in self.records if r["status"] == "ok"]

    @property
    def error_records(self) -> list[dict]:
        return [r for r in self.records if r["status"] == "error"]

    def totals(self) -> dict:
        ok = self.ok_records
        labels: dict[str, int] = {}
        for r in ok:
            for lab in r["labels"]:
                labels[lab["label"]] = labels.get(lab["label"], 0) + 1
        return {
            "contracts": len(ok),
            "errors": len(self.error_records),
            "proxies": sum(r["finding"]["is_proxy"] for r in ok),
            "upgradeable": sum(r["verdict"]["is_upgradeable"] for r in ok),
            "baseline_flagged": sum(r["baseline_flagged"] for r in ok),
            "labels": labels,
        }

    def to_dict(self) -> dict:
        self.sort()
        return {
            "tool": "proxyscan",
            "tool_version": self.tool_version,
            "schema_version": REPORT_SCHEMA_VERSION,
            "records": self.records,
            "totals": self.totals(),
            "comparison": self.comparison,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def record_key(record: dict) -> tuple[str, str]:
    return record["source"], record.get("contract") or ""


def error_record(source: str, message: str) -> dict:
    return {"source": source, "contract": None, "status": "error", "error": message}


def _records_for_unit(source: str, unit, file_ids: Optional[Iterable[str]]) -> list[dict]:
    out = []
    for analysis in analyze_unit(unit, file_ids):
        rec = analysis.to_dict()
        rec["source"] = source
        rec["status"] = "ok"
        rec["error"] = None
        rec["baseline_flagged"] = baseline_name_heuristic(analysis.contract)
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# Local files


def _resolve_import(root: str, importer: str, path: str) -> Optional[str]:
    """Map an import path to a file id relative to ``root``, if the file exists."""
    candidates = []
    if path.startswith("."):
        candidates.append(posixpath.normpath(posixpath.join(posixpath.dirname(importer), path)))
    else:
        candidates.append(posixpath.normpath(path))
        candidates.append(posixpath.normpath(posixpath.join(posixpath.dirname(importer), path)))
    for c in candidates:
        if c.startswith("..") or posixpath.isabs(c):
            continue
        if os.path.isfile(os.path.join(root, *c.split("/"))):
            return c
    return None


def _read(root: str, file_id: str) -> str:
    with open(os.path.join(root, *file_id.split("/")), encoding="utf-8", errors="replace") as fh:
        return fh.read()


def load_local_unit(root: str, file_id: str, compiler_version: Optional[Version] = None):
    """Compilation unit for ``file_id`` plus its transitive imports inside ``root``.

    :raises ParseError: if ``file_id`` itself cannot be parsed
    :raises OSError: if it cannot be read
    """
    main = parse_source(_read(root, file_id), file_id, compiler_version=compiler_version)
    units = [main]
    seen = {file_id}
    queue = [main]
    while queue:
        su = queue.pop()
        for imp in su.imports:
            target = _resolve_import(root, su.file_id, imp)
            if target is None or target in seen:
                continue
            seen.add(target)
            try:
                dep = parse_source(_read(root, target), target, compiler_version=compiler_version)
            except (ParseError, OSError, UnicodeError, RecursionError) as exc:
                logger.warning("skipping import %s of %s: %s", target, file_id, exc)
                continue
            units.append(dep)
            queue.append(dep)
    return resolve_compilation_unit(units)


def analyze_local_file(root: str, file_id: str, compiler_version: Optional[Version] = None) -> list[dict]:
    """Records for the contracts declared in ``file_id``.

    A failure to parse the file itself yields a single error record; failing
    imports are skipped.
    """
    try:
        unit = load_local_unit(root, file_id, compiler_version)
        return _records_for_unit(file_id, unit, [file_id])
    except (ParseError, OSError, UnicodeError, RecursionError) as exc:
        return [error_record(file_id, f"{type(exc).__name__}: {exc}")]


def collect_sol_files(path: str) -> tuple[str, list[str]]:
    """``(root, file ids)`` for a file or directory input; ids use ``/``."""
    if os.path.isfile(path):
        return os.path.dirname(os.path.abspath(path)), [os.path.basename(path)]
    files = []
    for dirpath, dirnames, filenames in os.walk(path):
        dirnames.sort()
        for name in sorted(filenames):
            if name.endswith(".sol"):
                rel = os.path.relpath(os.path.join(dirpath, name), path)
                files.append(rel.replace(os.sep, "/"))
    return path, sorted(files)


def _analyze_job(args: tuple) -> list[dict]:
    return analyze_local_file(*args)


# ---------------------------------------------------------------------------
# Addresses


def is_address(text: str) -> bool:
    try:
        normalize_address(text)
    except ValueError:
        return False
    return True


def analyze_address(address: str, client: ExplorerClient, compiler_version: Optional[Version] = None) -> list[dict]:
    address = normalize_address(address)
    try:
        bundle = client.fetch(address)
    except FetchError as exc:
        return [error_record(address, f"{type(exc).__name__}: {exc}")]
    version = compiler_version or parse_version(bundle.compiler_version)
    try:
        units = [parse_source(text, path, compiler_version=version) for path, text in bundle.files]
        unit = resolve_compilation_unit(units)
    except (ParseError, RecursionError) as exc:
        return [error_record(address, f"{type(exc).__name__}: {exc}")]
    return _records_for_unit(address, unit, None)


def run_batch(inputs: Sequence[str], config: Optional[BatchConfig] = None, *,
              client: Optional[ExplorerClient] = None, cache_dir: Optional[str] = None) -> BatchReport:
    """Analyze every input; failures become error records instead of aborting.

    :param inputs: ``.sol`` files, directories, or addresses
    :param client: explorer client for addresses (built from ``cache_dir`` if None)
    """
    config = config or BatchConfig()
    report = BatchReport()
    jobs: list[tuple] = []
    for item in inputs:
        if is_address(item):
            if client is None:
                client = ExplorerClient(cache=SourceCache(cache_dir) if cache_dir else None)
            report.records.extend(analyze_address(item, client, config.compiler_version))
            continue
        if not os.path.exists(item):
            report.records.append(error_record(item, "FileNotFoundError: no such file or directory"))
            continue
        root, files = collect_sol_files(item)
        jobs.extend((root, f, config.compiler_version) for f in files)
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_analyze_job, jobs))
    else:
        results = [_analyze_job(j) for j in jobs]
    for recs in results:
        report.records.extend(recs)
    report.sort()
    return report
