"""End-to-end analysis of source files: parse, resolve, detect, classify."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .consteval import slot_hex
from .detection import ProxyFinding, is_proxy
from .frontend import ParseError, parse_source
from .frontend.ast import ContractKind, Diagnostic, Version
from .model import CompilationUnit, ResolvedContract, resolve_compilation_unit
from .patterns import PatternLabel, classify_pattern, label_confidence
from .slots import lookup_slot
from .upgradeability import UpgradeabilityVerdict, is_upgradeable_proxy

ANALYZED_KINDS = (ContractKind.CONTRACT, ContractKind.ABSTRACT)


@dataclass
class ContractAnalysis:
    contract: ResolvedContract
    finding: ProxyFinding
    verdict: UpgradeabilityVerdict
    labels: set[PatternLabel] = field(default_factory=set)

    @property
    def name(self) -> str:
        return self.contract.name

    def to_dict(self) -> dict:
        f, v = self.finding, self.verdict
        target = f.delegates_to
        lookup = f.external_lookup
        slot = f.slot_literal if f.slot_literal is not None else v.slot
        known = lookup_slot(slot)
        diags = list(f.diagnostics) + list(v.warnings) + list(self.contract.diagnostics)
        return {
            "contract": self.name,
            "kind": self.contract.kind.value,
            "finding": {
                "is_proxy": f.is_proxy,
                "mechanism": f.mechanism.value,
                "delegates_to": None if target is None else {
                    "name": target.name,
                    "scope": target.scope.value,
                    "contract": target.owner_contract,
                    "is_constant": target.is_constant,
                },
                "slot": None if f.slot_literal is None else slot_hex(f.slot_literal),
                "function": f.function.full_name if f.function is not None else None,
                "selector_keyed": f.selector_keyed,
                "external_lookup": None if lookup is None else {
                    "receiver": lookup.receiver.name if lookup.receiver is not None else None,
                    "interface": lookup.receiver_type,
                    "method": lookup.method,
                    "arity": lookup.arity,
                    "resolved_contract": lookup.resolved_contract,
                },
            },
            "verdict": {
                "is_upgradeable": v.is_upgradeable,
                "reason": v.reason.value,
                "impl_setter": v.impl_setter.full_name if v.impl_setter is not None else None,
                "setters": [s.full_name for s in v.setters],
                "setter_guarded": v.setter_guarded,
                "impl_getter": v.impl_getter.full_name if v.impl_getter is not None else None,
                "slot": None if slot is None else slot_hex(slot),
                "slot_meaning": None if known is None else f"{known.family}:{known.meaning}",
            },
            "labels": [{"label": lab.value, "confidence": label_confidence(lab)}
                       for lab in sorted(self.labels, key=lambda x: x.value)],
            "diagnostics": sorted({_diag_text(d) for d in diags}),
        }


def _diag_text(d: Diagnostic) -> str:
    code = f"[{d.code}] " if d.code else ""
    return f"{d.severity}: {code}{d.message}"


def analyze_contract(contract: ResolvedContract, unit: CompilationUnit) -> ContractAnalysis:
    finding = is_proxy(contract, unit)
    verdict = is_upgradeable_proxy(contract, finding, unit)
    labels = classify_pattern(contract, unit, finding, verdict)
    return ContractAnalysis(contract, finding, verdict, labels)


def analyze_unit(unit: CompilationUnit, file_ids: Optional[Iterable[str]] = None) -> list[ContractAnalysis]:
    """Analyze concrete and abstract contracts, optionally only those declared in ``file_ids``."""
    wanted = set(file_ids) if file_ids is not None else None
    out = []
    for c in unit:
        if c.kind not in ANALYZED_KINDS:
            continue
        if wanted is not None and c.file_id not in wanted:
            continue
        out.append(analyze_contract(c, unit))
    return out


def analyze_sources(sources: Mapping[str, str], compiler_version: Optional[Version] = None) -> list[ContractAnalysis]:
    """Parse ``{file_id: text}`` into one unit and analyze every contract.

    :raises ParseError: if any file cannot be parsed
    """
    units = [parse_source(text, fid, compiler_version=compiler_version) for fid, text in sources.items()]
    return analyze_unit(resolve_compilation_unit(units))


__all__ = ["ContractAnalysis", "ParseError", "analyze_contract", "analyze_unit", "analyze_sources"]
