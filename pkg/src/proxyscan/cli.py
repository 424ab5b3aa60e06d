"""Command-line entry point.

Exit codes: 0 success, 1 finding (file error, incompatible layout, selector
collision), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

from .clashes import ClashKind, find_selector_clashes
from .corpus.batch import BatchConfig, BatchReport, collect_sol_files, load_local_unit, run_batch
from .corpus.compare import LabelFileError, MissingLabel, compare_detectors, load_ground_truth
from .corpus.fetch import DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT, ExplorerClient, FetchError, SourceCache
from .frontend import ParseError
from .frontend.ast import ContractKind
from .frontend.pragma import parse_version
from .layout import Compatibility, compute_storage_layout, diff_storage_layouts

EXIT_OK = 0
EXIT_FINDING = 1
EXIT_USAGE = 2

logger = logging.getLogger("proxyscan")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Helpers


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _version(text: Optional[str]):
    if text is None:
        return None
    v = parse_version(text)
    if v is None:
        raise UsageError(f"bad compiler version {text!r}")
    return v


def _load_contract(path: str, name: Optional[str]):
    """Resolved contract ``name`` from ``path``; defaults to the last concrete contract declared there."""
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    root, files = collect_sol_files(path)
    try:
        unit = load_local_unit(root, files[0])
    except (ParseError, OSError, UnicodeError) as exc:
        raise UsageError(f"cannot parse {path}: {exc}") from exc
    if name is not None:
        contract = unit.contract(name)
        if contract is None:
            raise UsageError(f"contract {name!r} not found in {path}")
        return contract
    local = [c for c in unit if c.file_id == files[0] and c.kind in (ContractKind.CONTRACT, ContractKind.ABSTRACT)]
    if not local:
        raise UsageError(f"no contract declared in {path}")
    return local[-1]


def _format_record(rec: dict) -> str:
    if rec["status"] == "error":
        return f"{rec['source']}: ERROR {rec['error']}\n"
    f, v = rec["finding"], rec["verdict"]
    lines = [f"{rec['source']}:{rec['contract']}"]
    if f["is_proxy"]:
        target = f["delegates_to"]
        where = "unresolved"
        if target is not None:
            owner = f"{target['contract']}." if target["contract"] else ""
            where = f"{target['scope']} {owner}{target['name']}"
        elif f["slot"] is not None:
            where = f"slot {f['slot']}"
        lines.append(f"  proxy: yes, target {where} ({f['mechanism']} in {f['function']})")
    else:
        lines.append("  proxy: no")
    detail = []
    if v["impl_setter"]:
        detail.append(f"setter {v['impl_setter']}{' (guarded)' if v['setter_guarded'] else ''}")
    if v["impl_getter"]:
        detail.append(f"getter {v['impl_getter']}")
    if v["slot_meaning"]:
        detail.append(f"slot {v['slot_meaning']}")
    suffix = f"; {', '.join(detail)}" if detail else ""
    lines.append(f"  upgradeable: {'yes' if v['is_upgradeable'] else 'no'} ({v['reason']}{suffix})")
    labels = [lab["label"] + ("?" if lab["confidence"] == "heuristic" else "") for lab in rec["labels"]]
    lines.append(f"  labels: {', '.join(labels) if labels else '-'}")
    lines.append(f"  baseline: {'flagged' if rec['baseline_flagged'] else 'not flagged'}")
    for d in rec["diagnostics"]:
        lines.append(f"  {d}")
    return "\n".join(lines) + "\n"


def format_report(report: BatchReport, fmt: str) -> str:
    if fmt == "json":
        return report.to_json()
    data = report.to_dict()
    out = [_format_record(r) for r in data["records"]]
    t = data["totals"]
    out.append(f"{t['contracts']} contracts, {t['proxies']} proxies, {t['upgradeable']} upgradeable, "
               f"{t['errors']} errors\n")
    if data["comparison"] is not None:
        c = data["comparison"]
        ratio = f"{c['eliminated_fp_ratio']:.3f}" + (" (baseline_fp=0)" if c["baseline_fp_zero"] else "")
        out.append(f"baseline flagged {c['baseline_flagged']}, improved flagged {c['improved_flagged']}, "
                   f"baseline FPs {c['baseline_fp']}, eliminated_fp_ratio {ratio}, missed TPs {c['missed_tp']}\n")
        out.append(f"note: {c['motivation']}\n")
    return "".join(out)


# ---------------------------------------------------------------------------
# Commands


def cmd_analyze(args) -> int:
    for p in args.paths:
        if not os.path.exists(p):
            raise UsageError(f"no such file or directory: {p}")
    report = run_batch(args.paths, BatchConfig(jobs=args.jobs, compiler_version=_version(args.compiler_version)))
    _emit(format_report(report, args.format), args.output)
    return EXIT_FINDING if report.error_records else EXIT_OK


def cmd_diff_storage(args) -> int:
    old = _load_contract(args.old_file, args.old_contract)
    new = _load_contract(args.new_file, args.new_contract)
    result = diff_storage_layouts(compute_storage_layout(old), compute_storage_layout(new))
    if args.format == "json":
        data = {
            "old": f"{args.old_file}:{old.name}",
            "new": f"{args.new_file}:{new.name}",
            "status": result.status.value,
            "violations": [{
                "kind": v.kind.value,
                "old": None if v.old is None else _slot_dict(v.old),
                "new": None if v.new is None else _slot_dict(v.new),
            } for v in result.violations],
            "warnings": list(result.warnings),
        }
        _emit(json.dumps(data, sort_keys=True, indent=2) + "\n", args.output)
    else:
        lines = [f"{old.name} -> {new.name}: {result.status.value}"]
        for v in result.violations:
            lines.append(f"  {v.kind.value}: {_slot_text(v.old)} -> {_slot_text(v.new)}")
        lines.extend(f"  warning: {w}" for w in result.warnings)
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_FINDING if result.status is Compatibility.INCOMPATIBLE else EXIT_OK


def _slot_dict(a) -> dict:
    return {"name": a.var_name, "contract": a.declaring_contract, "slot": a.slot, "offset": a.offset,
            "size": a.size, "type": a.type_label}


def _slot_text(a) -> str:
    if a is None:
        return "(none)"
    return f"{a.declaring_contract}.{a.var_name} {a.type_label} @ slot {a.slot}+{a.offset}"


def cmd_selectors(args) -> int:
    proxy = _load_contract(args.proxy_file, args.proxy_contract)
    impl = _load_contract(args.impl_file, args.impl_contract)
    clashes = find_selector_clashes(proxy, impl)
    if args.format == "json":
        data = {
            "proxy": f"{args.proxy_file}:{proxy.name}",
            "implementation": f"{args.impl_file}:{impl.name}",
            "clashes": [{"selector": c.selector_hex, "proxy": c.proxy_signature, "implementation": c.impl_signature,
                         "kind": c.kind.value, "note": c.note} for c in clashes],
        }
        _emit(json.dumps(data, sort_keys=True, indent=2) + "\n", args.output)
    else:
        lines = [f"{proxy.name} vs {impl.name}: {len(clashes)} shared selector(s)"]
        for c in clashes:
            lines.append(f"  {c.kind.value} {c.selector_hex} {c.proxy_signature} / {c.impl_signature}: {c.note}")
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_FINDING if any(c.kind is ClashKind.COLLISION for c in clashes) else EXIT_OK


def _client(args, *, max_retries: int = 3) -> ExplorerClient:
    cache = SourceCache(args.cache_dir) if args.cache_dir else None
    return ExplorerClient(args.endpoint, api_key_env=args.api_key_env, cache=cache, delay=args.delay,
                          max_retries=max_retries)


def cmd_corpus_fetch(args) -> int:
    addresses = list(args.address or [])
    if args.address_file:
        with open(args.address_file, encoding="utf-8") as fh:
            addresses.extend(line.strip() for line in fh if line.strip() and not line.startswith("#"))
    if not addresses:
        raise UsageError("no addresses given")
    client = _client(args)
    results = []
    for addr in addresses:
        try:
            bundle = client.fetch(addr)
            results.append({"address": bundle.address, "status": "ok", "contract": bundle.contract_name,
                            "files": len(bundle.files)})
        except ValueError as exc:
            results.append({"address": addr, "status": "error", "error": str(exc)})
        except FetchError as exc:
            results.append({"address": addr.lower(), "status": type(exc).__name__, "error": str(exc)})
    if args.format == "json":
        _emit(json.dumps({"fetched": results}, sort_keys=True, indent=2) + "\n", args.output)
    else:
        lines = []
        for r in results:
            if r["status"] == "ok":
                lines.append(f"{r['address']}: {r['contract']} ({r['files']} file(s))")
            else:
                lines.append(f"{r['address']}: {r['status']}: {r['error']}")
        _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_corpus_run(args) -> int:
    if args.compare_baseline and not args.labels:
        raise UsageError("--compare-baseline needs --labels")
    for p in args.inputs:
        if not p.lower().startswith("0x") and not os.path.exists(p):
            raise UsageError(f"no such file or directory: {p}")
    client = _client(args) if any(p.lower().startswith("0x") for p in args.inputs) else None
    report = run_batch(args.inputs, BatchConfig(jobs=args.jobs, compiler_version=_version(args.compiler_version)),
                       client=client)
    if args.labels:
        try:
            stats = compare_detectors(report, load_ground_truth(args.labels))
        except (MissingLabel, LabelFileError, OSError) as exc:
            print(f"proxyscan: {exc}", file=sys.stderr)
            return EXIT_FINDING
        report.comparison = stats.to_dict()
    _emit(format_report(report, args.format), args.output)
    return EXIT_OK


def cmd_corpus_compare(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read report {args.report}: {exc}") from exc
    report = BatchReport(records=data.get("records", []), tool_version=data.get("tool_version", ""))
    try:
        stats = compare_detectors(report, load_ground_truth(args.labels))
    except (MissingLabel, LabelFileError, OSError) as exc:
        print(f"proxyscan: {exc}", file=sys.stderr)
        return EXIT_FINDING
    report.comparison = stats.to_dict()
    if args.output:
        _emit(report.to_json(), args.output)
    if args.format == "json":
        sys.stdout.write(json.dumps(report.comparison, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(stats.summary() + "\n" + f"note: {report.comparison['motivation']}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text", help="output format")
    common.add_argument("--output", "-o", metavar="PATH", help="write output to PATH instead of stdout")

    parallel = argparse.ArgumentParser(add_help=False)
    parallel.add_argument("--jobs", "-j", type=_positive_int, default=os.cpu_count() or 1,
                          help="worker processes for local files (default: available cores)")
    parallel.add_argument("--compiler-version", metavar="X.Y.Z",
                          help="override pragmas when choosing the inline-assembly representation")

    network = argparse.ArgumentParser(add_help=False)
    network.add_argument("--endpoint", default=DEFAULT_ENDPOINT, help="explorer getsourcecode endpoint")
    network.add_argument("--cache-dir", metavar="PATH", help="per-address source cache directory")
    network.add_argument("--api-key-env", default=DEFAULT_API_KEY_ENV, help="environment variable holding the API key")
    network.add_argument("--delay", type=float, default=0.25, help="seconds between requests")

    parser = argparse.ArgumentParser(prog="proxyscan", description="Static analysis of upgradeable proxy contracts.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", parents=[common, parallel], help="detect and classify proxies")
    p.add_argument("paths", nargs="+", help=".sol files or directories")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("diff-storage", parents=[common], help="compare storage layouts of two versions")
    p.add_argument("old_file")
    p.add_argument("new_file")
    p.add_argument("--old-contract", help="contract in OLD_FILE (default: last declared)")
    p.add_argument("--new-contract", help="contract in NEW_FILE (default: last declared)")
    p.set_defaults(func=cmd_diff_storage)

    p = sub.add_parser("selectors", parents=[common], help="find function selector clashes")
    p.add_argument("proxy_file")
    p.add_argument("impl_file")
    p.add_argument("--proxy-contract", help="contract in PROXY_FILE (default: last declared)")
    p.add_argument("--impl-contract", help="contract in IMPL_FILE (default: last declared)")
    p.set_defaults(func=cmd_selectors)

    corpus = sub.add_parser("corpus", help="fetch, batch-run and compare over a corpus")
    csub = corpus.add_subparsers(dest="corpus_command", required=True)

    p = csub.add_parser("fetch", parents=[common, network], help="download verified sources into the cache")
    p.add_argument("--address", action="append", help="contract address (repeatable)")
    p.add_argument("--address-file", metavar="PATH", help="file with one address per line")
    p.set_defaults(func=cmd_corpus_fetch)

    p = csub.add_parser("run", parents=[common, parallel, network], help="analyze files, directories or addresses")
    p.add_argument("inputs", nargs="+", help=".sol files, directories or 0x addresses")
    p.add_argument("--labels", metavar="FILE", help="ground truth: source,contract,label per line")
    p.add_argument("--compare-baseline", action="store_true", help="compare with the name-based baseline")
    p.set_defaults(func=cmd_corpus_run)

    p = csub.add_parser("compare", parents=[common], help="compare detectors on a saved JSON report")
    p.add_argument("report", help="JSON report from 'corpus run --format json'")
    p.add_argument("--labels", metavar="FILE", required=True, help="ground truth file")
    p.set_defaults(func=cmd_corpus_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"proxyscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
