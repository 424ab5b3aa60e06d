"""Taxonomy of upgradeable proxy patterns."""

from __future__ import annotations

import enum
from typing import Optional

from .detection import ProxyFinding, is_proxy
from .frontend.ast import ContractKind, FunctionKind, MappingTypeName, ElementaryTypeName
from .keccak import keccak256  # noqa: F401  (re-exported)
from .model import CompilationUnit, ResolvedContract, Scope
from .selectors import CanonicalizationError, function_selector  # noqa: F401  (re-exported)
from .slots import KNOWN_SLOTS, KnownSlot, lookup_slot  # noqa: F401  (re-exported)
from .upgradeability import Reason, UpgradeabilityVerdict, reaches_sender_check


class PatternLabel(str, enum.Enum):
    INHERITED_STORAGE = "INHERITED_STORAGE"
    ETERNAL_STORAGE = "ETERNAL_STORAGE"
    EIP1967_UNSTRUCTURED = "EIP1967_UNSTRUCTURED"
    EIP1822_UUPS = "EIP1822_UUPS"
    TRANSPARENT_ADMIN = "TRANSPARENT_ADMIN"
    EIP1538_TRANSPARENT = "EIP1538_TRANSPARENT"
    EIP2535_DIAMOND = "EIP2535_DIAMOND"
    BEACON = "BEACON"
    REGISTRY = "REGISTRY"
    EIP1167_MINIMAL = "EIP1167_MINIMAL"
    EIP897_INTERFACE = "EIP897_INTERFACE"
    BESPOKE_UPGRADEABLE = "BESPOKE_UPGRADEABLE"


HEURISTIC_LABELS = frozenset({PatternLabel.INHERITED_STORAGE, PatternLabel.ETERNAL_STORAGE})

_UNSTRUCTURED_FAMILIES = {"eip1967", "zeppelinos"}


def label_confidence(label: PatternLabel) -> str:
    return "heuristic" if label in HEURISTIC_LABELS else "definite"


def _slot_of(finding: ProxyFinding, verdict: UpgradeabilityVerdict) -> Optional[int]:
    return verdict.slot if verdict.slot is not None else finding.slot_literal


def _declares_setter(contract: ResolvedContract, verdict: UpgradeabilityVerdict) -> bool:
    setter = verdict.impl_setter
    return setter is not None and contract.inherits(setter.declaring_contract)


def _mutating_entry_points(contract: ResolvedContract) -> list:
    return [f for f in contract.functions_in_order()
            if f.kind is FunctionKind.FUNCTION and f.is_entry_point and f.mutability not in ("view", "pure")]


def _is_eternal_store(contract: ResolvedContract) -> bool:
    vars_ = [v for v in contract.definition.state_vars if not v.is_constant]
    if not vars_:
        return False
    for v in vars_:
        t = v.type_name
        if not (isinstance(t, MappingTypeName) and isinstance(t.key, ElementaryTypeName) and t.key.name == "bytes32"):
            return False
    return True


def _shares_storage_base(contract: ResolvedContract, finding: ProxyFinding, unit: Optional[CompilationUnit]) -> bool:
    target = finding.delegates_to
    if unit is None or target is None or target.scope is not Scope.STATE or target.is_constant:
        return False
    base = target.declaring_contract
    if base == contract.name or not contract.inherits(base):
        return False
    for other in unit:
        if other is contract or other.kind in (ContractKind.INTERFACE, ContractKind.LIBRARY):
            continue
        if contract.inherits(other.name) or other.inherits(contract.name):
            continue
        if other.inherits(base) and not is_proxy(other, unit).is_proxy:
            return True
    return False


def classify_pattern(contract: ResolvedContract, unit: Optional[CompilationUnit], finding: ProxyFinding,
                     verdict: UpgradeabilityVerdict) -> set[PatternLabel]:
    """Labels for ``contract``.  Rules run in a fixed order and accumulate."""
    labels: set[PatternLabel] = set()
    if not finding.is_proxy:
        return labels
    slot = _slot_of(finding, verdict)
    known = lookup_slot(slot)
    if known is not None and known.family in _UNSTRUCTURED_FAMILIES:
        labels.add(PatternLabel.EIP1967_UNSTRUCTURED)
    if known is not None and known.family == "eip1822" and not _declares_setter(contract, verdict):
        labels.add(PatternLabel.EIP1822_UUPS)
    if finding.selector_keyed:
        if contract.functions_named("updateContract"):
            labels.add(PatternLabel.EIP1538_TRANSPARENT)
        else:
            labels.add(PatternLabel.EIP2535_DIAMOND)
    lookup = finding.external_lookup
    if lookup is not None and lookup.arity == 0 and lookup.receiver is not None \
            and lookup.receiver.scope is Scope.STATE:
        labels.add(PatternLabel.BEACON)
    if (lookup is not None and lookup.arity >= 1) or (finding.keyed_lookup and not finding.selector_keyed):
        labels.add(PatternLabel.REGISTRY)
    if verdict.reason is Reason.TARGET_CONSTANT and not _mutating_entry_points(contract):
        labels.add(PatternLabel.EIP1167_MINIMAL)
    if any(_is_eternal_store(c) for c in contract.linearization if c.kind is not ContractKind.INTERFACE):
        labels.add(PatternLabel.ETERNAL_STORAGE)
    if _shares_storage_base(contract, finding, unit):
        labels.add(PatternLabel.INHERITED_STORAGE)
    entry = contract.fallback or contract.receive
    if verdict.setter_guarded and entry is not None and reaches_sender_check(entry, contract):
        labels.add(PatternLabel.TRANSPARENT_ADMIN)
    if any(not f.params for f in contract.functions_named("implementation")) \
            and any(not f.params for f in contract.functions_named("proxyType")):
        labels.add(PatternLabel.EIP897_INTERFACE)
    if not labels and verdict.is_upgradeable:
        labels.add(PatternLabel.BESPOKE_UPGRADEABLE)
    return labels
