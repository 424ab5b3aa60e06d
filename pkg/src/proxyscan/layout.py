"""Storage layout computation and upgrade-compatibility diffs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .consteval import evaluate
from .frontend.ast import (
    ArrayTypeName, Diagnostic, ElementaryTypeName, FunctionTypeName, MappingTypeName, StructDef, TypeName,
    UserTypeName,
)
from .model import ResolvedContract, canonical_type

SLOT_BYTES = 32


@dataclass(frozen=True)
class SlotAssignment:
    var_name: str
    declaring_contract: str
    slot: int
    offset: int
    size: int
    type_label: str

    @property
    def placement(self) -> tuple[int, int, int, str]:
        return self.slot, self.offset, self.size, self.type_label


@dataclass(frozen=True)
class _Shape:
    """Size in bytes; packable values share slots, others take whole slots."""

    size: int
    packable: bool


def _elementary_size(name: str) -> Optional[int]:
    name = name.replace("address payable", "address")
    if name == "bool":
        return 1
    if name == "address":
        return 20
    if name in ("uint", "int"):
        return 32
    if name == "byte":
        return 1
    for prefix in ("uint", "int"):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return int(name[len(prefix):]) // 8
    if name.startswith("bytes") and name[5:].isdigit():
        return int(name[5:])
    if name.startswith(("fixed", "ufixed")):
        digits = name.lstrip("uf").replace("ixed", "")
        bits = digits.split("x")[0] if digits else "128"
        return int(bits) // 8 if bits.isdigit() else 16
    return None


class LayoutBuilder:
    def __init__(self, contract: ResolvedContract):
        self.contract = contract
        self.unit = contract.unit
        self.diagnostics: list[Diagnostic] = []

    def _struct(self, t: UserTypeName) -> Optional[StructDef]:
        short = t.path.rsplit(".", 1)[-1]
        if self.unit is not None:
            found = self.unit.structs.get(t.path) or self.unit.structs.get(short)
            if found is not None:
                return found
        for c in self.contract.linearization:
            for s in c.definition.structs:
                if s.name == short:
                    return s
        return None

    def _is_enum(self, t: UserTypeName) -> bool:
        short = t.path.rsplit(".", 1)[-1]
        if self.unit is not None and (t.path in self.unit.enums or short in self.unit.enums):
            return True
        return any(e.name == short for c in self.contract.linearization for e in c.definition.enums)

    def _is_contract(self, t: UserTypeName) -> bool:
        short = t.path.rsplit(".", 1)[-1]
        return self.unit is not None and short in self.unit.contracts

    def shape(self, t: TypeName, depth: int = 0) -> _Shape:
        if depth > 16:
            return _Shape(SLOT_BYTES, False)
        if isinstance(t, ElementaryTypeName):
            if t.name in ("string", "bytes"):
                return _Shape(SLOT_BYTES, False)
            size = _elementary_size(t.name)
            if size is None:
                self.diagnostics.append(Diagnostic(f"unknown elementary type {t.name}; assuming one slot",
                                                   t.span, "warning", "UnknownTypeSize"))
                return _Shape(SLOT_BYTES, False)
            return _Shape(size, True)
        if isinstance(t, FunctionTypeName):
            return _Shape(24 if "external" in t.text else 8, True)
        if isinstance(t, MappingTypeName):
            return _Shape(SLOT_BYTES, False)
        if isinstance(t, ArrayTypeName):
            if t.length is None:
                return _Shape(SLOT_BYTES, False)
            n = evaluate(t.length, self._constant)
            if n is None:
                self.diagnostics.append(Diagnostic("array length is not a constant; assuming one slot",
                                                   t.span, "warning", "UnknownTypeSize"))
                return _Shape(SLOT_BYTES, False)
            elem = self.shape(t.base, depth + 1)
            if elem.packable and elem.size <= SLOT_BYTES // 2:
                per_slot = SLOT_BYTES // elem.size
                slots = -(-n // per_slot)
            else:
                slots = n * -(-elem.size // SLOT_BYTES)
            return _Shape(max(slots, 1) * SLOT_BYTES if n else 0, False)
        if isinstance(t, UserTypeName):
            if self._is_enum(t):
                return _Shape(1, True)
            if self._is_contract(t):
                return _Shape(20, True)
            struct = self._struct(t)
            if struct is not None:
                slot, offset = self._pack([m.type_name for m in struct.members], depth + 1)
                total = slot + (1 if offset else 0)
                return _Shape(max(total, 1) * SLOT_BYTES, False)
            self.diagnostics.append(Diagnostic(f"size of type {t.path} is unknown; assuming one full slot",
                                               t.span, "warning", "UnknownTypeSize"))
            return _Shape(SLOT_BYTES, False)
        return _Shape(SLOT_BYTES, False)

    def _constant(self, name: str) -> Optional[int]:
        ref = self.contract.state_var(name)
        if ref is not None and ref.is_constant:
            return evaluate(ref.initializer)
        return None

    def _pack(self, types: list[TypeName], depth: int) -> tuple[int, int]:
        slot, offset = 0, 0
        for t in types:
            slot, offset, _ = self._place(self.shape(t, depth), slot, offset)
        return slot, offset

    @staticmethod
    def _place(shape: _Shape, slot: int, offset: int) -> tuple[int, int, tuple[int, int]]:
        """Next (slot, offset) after placing ``shape``, and where it went."""
        if shape.packable:
            if offset + shape.size > SLOT_BYTES:
                slot, offset = slot + 1, 0
            at = (slot, offset)
            offset += shape.size
            if offset == SLOT_BYTES:
                slot, offset = slot + 1, 0
            return slot, offset, at
        if offset > 0:
            slot, offset = slot + 1, 0
        at = (slot, 0)
        slot += max(-(-shape.size // SLOT_BYTES), 0)
        return slot, 0, at

    def build(self) -> list[SlotAssignment]:
        out = []
        slot, offset = 0, 0
        for ref in self.contract.all_state_vars:
            if ref.is_constant:
                continue
            shape = self.shape(ref.type_name)
            slot, offset, (at_slot, at_offset) = self._place(shape, slot, offset)
            out.append(SlotAssignment(ref.name, ref.declaring_contract or "", at_slot, at_offset, shape.size,
                                      canonical_type(ref.type_name)))
        return out


def compute_storage_layout(contract: ResolvedContract, diagnostics: Optional[list[Diagnostic]] = None) -> list[SlotAssignment]:
    """Slot, offset and size of every storage variable of ``contract``, inherited ones first."""
    builder = LayoutBuilder(contract)
    layout = builder.build()
    if diagnostics is not None:
        diagnostics.extend(builder.diagnostics)
    return layout


# ---------------------------------------------------------------------------
# Diffs


class Compatibility(str, enum.Enum):
    IDENTICAL = "IDENTICAL"
    APPEND_ONLY_COMPATIBLE = "APPEND_ONLY_COMPATIBLE"
    INCOMPATIBLE = "INCOMPATIBLE"


class ViolationKind(str, enum.Enum):
    REORDERED = "REORDERED"
    TYPE_CHANGED = "TYPE_CHANGED"
    INSERTED = "INSERTED"
    REMOVED = "REMOVED"
    INHERITANCE_CHANGED = "INHERITANCE_CHANGED"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    old: Optional[SlotAssignment]
    new: Optional[SlotAssignment]


@dataclass(frozen=True)
class CompatibilityReport:
    status: Compatibility
    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if (self.status is Compatibility.INCOMPATIBLE) != bool(self.violations):
            raise ValueError("status is INCOMPATIBLE exactly when there are violations")


def _classify(old: SlotAssignment, new: SlotAssignment, old_layout: list[SlotAssignment],
              new_layout: list[SlotAssignment]) -> ViolationKind:
    old_names = {e.var_name for e in old_layout}
    new_names = {e.var_name for e in new_layout}
    old_bases = {e.declaring_contract for e in old_layout}
    new_bases = {e.declaring_contract for e in new_layout}
    if new.declaring_contract not in old_bases or old.declaring_contract not in new_bases:
        return ViolationKind.INHERITANCE_CHANGED
    if old.var_name == new.var_name:
        return ViolationKind.TYPE_CHANGED
    if old.var_name in new_names and new.var_name in old_names:
        return ViolationKind.REORDERED
    if new.var_name not in old_names:
        return ViolationKind.INSERTED
    return ViolationKind.REMOVED


def diff_storage_layouts(old: list[SlotAssignment], new: list[SlotAssignment]) -> CompatibilityReport:
    """Compare two layouts position by position."""
    violations: list[Violation] = []
    warnings: list[str] = []
    old_names = {e.var_name for e in old}
    new_names = {e.var_name for e in new}
    for a, b in zip(old, new):
        if a.placement == b.placement and a.var_name == b.var_name:
            continue
        if a.placement == b.placement and a.declaring_contract == b.declaring_contract \
                and a.var_name not in new_names and b.var_name not in old_names:
            warnings.append(f"{a.var_name} renamed to {b.var_name} at slot {a.slot} offset {a.offset}")
            continue
        violations.append(Violation(_classify(a, b, old, new), a, b))
    for a in old[len(new):]:
        kind = ViolationKind.REORDERED if a.var_name in new_names else ViolationKind.REMOVED
        violations.append(Violation(kind, a, None))
    if violations:
        return CompatibilityReport(Compatibility.INCOMPATIBLE, tuple(violations), tuple(warnings))
    if len(new) > len(old):
        return CompatibilityReport(Compatibility.APPEND_ONLY_COMPATIBLE, (), tuple(warnings))
    return CompatibilityReport(Compatibility.IDENTICAL, (), tuple(warnings))
