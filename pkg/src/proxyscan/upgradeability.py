"""Whether a proxy's delegate target can change after deployment."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .detection import (
    MAX_CALL_DEPTH, ProxyFinding, asm_calls, constant_value, internal_callees, state_target_of, trace_expression,
)
from .frontend.ast import (
    Assignment, BinaryOp, Block, Call, Diagnostic, FunctionDef, FunctionKind, Identifier, IndexAccess, Literal,
    MemberAccess, MsgAccess, Param, ReturnStmt, StateVarDecl, UnaryOp, walk,
)
from .model import CompilationUnit, ResolvedContract, Scope, VariableRef, iter_yul_blocks
from .slots import is_known_slot


class Reason(str, enum.Enum):
    NOT_PROXY = "NOT_PROXY"
    TARGET_CONSTANT = "TARGET_CONSTANT"
    SETTER_FOUND = "SETTER_FOUND"
    GETTER_NONCONSTANT = "GETTER_NONCONSTANT"
    HARDCODED_SLOT_KNOWN = "HARDCODED_SLOT_KNOWN"
    HARDCODED_SLOT_UNKNOWN = "HARDCODED_SLOT_UNKNOWN"
    NO_EVIDENCE = "NO_EVIDENCE"


_POSITIVE = {Reason.SETTER_FOUND, Reason.GETTER_NONCONSTANT, Reason.HARDCODED_SLOT_KNOWN}


@dataclass(frozen=True)
class UpgradeabilityVerdict:
    """Outcome of the upgradeability check.

    :param impl_setter: canonical setter, the first in linearization order
    :param setters: every function that writes the target
    :param setter_guarded: the setter path compares ``msg.sender``
    """

    is_upgradeable: bool
    reason: Reason
    impl_setter: Optional[FunctionDef] = None
    impl_getter: Optional[FunctionDef] = None
    slot: Optional[int] = None
    setters: tuple[FunctionDef, ...] = field(default=(), compare=False)
    setter_guarded: bool = False
    searched_contract: Optional[str] = None
    warnings: tuple[Diagnostic, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if self.is_upgradeable != (self.reason in _POSITIVE):
            raise ValueError(f"reason {self.reason.value} does not match is_upgradeable={self.is_upgradeable}")


def _excluded(fn: FunctionDef) -> bool:
    return fn.kind in (FunctionKind.CONSTRUCTOR, FunctionKind.FALLBACK, FunctionKind.RECEIVE,
                       FunctionKind.MODIFIER)


def _same_var(a: Optional[VariableRef], b: Optional[VariableRef]) -> bool:
    return a is not None and b is not None and a.name == b.name and a.scope == b.scope \
        and a.declaring_contract == b.declaring_contract and a.function == b.function


def _lhs_root(expr: object) -> tuple[object, bool]:
    """Innermost base of an lvalue, and whether it was reached through indexing."""
    indexed = False
    while True:
        if isinstance(expr, IndexAccess):
            expr, indexed = expr.base, True
        elif isinstance(expr, MemberAccess) and not (isinstance(expr.expression, Identifier)
                                                     and expr.expression.name == "this"):
            expr, indexed = expr.expression, indexed or isinstance(expr.expression, IndexAccess)
        else:
            return expr, indexed


def writes_target(fn: FunctionDef, contract: ResolvedContract, unit: Optional[CompilationUnit],
                  target: Optional[VariableRef], slot: Optional[int]) -> bool:
    """Whether ``fn`` itself assigns ``target``, stores into it (mappings), or
    ``sstore``s to ``slot``."""
    if fn.body is None:
        return False
    state_target = target if target is not None and target.scope is Scope.STATE else None
    if state_target is not None:
        for node in walk(fn.body):
            lhs = None
            if isinstance(node, Assignment):
                lhs = node.lhs
            elif isinstance(node, UnaryOp) and node.op == "delete":
                lhs = node.operand
            if lhs is None:
                continue
            root, _indexed = _lhs_root(lhs)
            if _same_var(state_target_of(root, fn, contract, unit), state_target):
                return True
    for block in iter_yul_blocks(fn):
        for args in asm_calls(block, "sstore"):
            if not args or isinstance(args[0], str):
                continue
            if slot is not None and constant_value(args[0], fn, contract, unit) == slot:
                return True
            if state_target is not None and _same_var(state_target_of(args[0], fn, contract, unit), state_target):
                return True
    return False


def find_setters(contract: ResolvedContract, target: Optional[VariableRef] = None, slot: Optional[int] = None,
                 unit: Optional[CompilationUnit] = None) -> list[FunctionDef]:
    """Every function other than constructor, fallback and receive that writes the target."""
    if target is None and slot is None:
        raise ValueError("a target variable or a slot is required")
    return [fn for fn in contract.functions_in_order()
            if not _excluded(fn) and writes_target(fn, contract, unit, target, slot)]


def find_setter_in_contract(contract: ResolvedContract, target: Optional[VariableRef] = None,
                            slot: Optional[int] = None,
                            unit: Optional[CompilationUnit] = None) -> Optional[FunctionDef]:
    """First setter of ``target`` (or of storage ``slot``) in linearization order."""
    setters = find_setters(contract, target, slot, unit)
    return setters[0] if setters else None


def implicit_getter(decl: StateVarDecl) -> FunctionDef:
    """The accessor the compiler generates for a public state variable."""
    return FunctionDef(
        name=decl.name, kind=FunctionKind.FUNCTION, params=(), returns=(Param(decl.type_name),),
        visibility="external", mutability="view",
        body=Block((ReturnStmt(Identifier(decl.name, decl.span), decl.span),), span=decl.span),
        declaring_contract=decl.declaring_contract, span=decl.span,
    )


def _returns_target(fn: FunctionDef, contract: ResolvedContract, unit: Optional[CompilationUnit],
                    target: Optional[VariableRef], slot: Optional[int]) -> bool:
    values: list[object] = [n.value for n in walk(fn.body) if isinstance(n, ReturnStmt) and n.value is not None]
    values += [Identifier(p.name) for p in fn.returns if p.name]
    for v in values:
        if isinstance(v, IndexAccess):
            root, _ = _lhs_root(v)
            if target is not None and _same_var(state_target_of(root, fn, contract, unit), target):
                return True
        t = trace_expression(v, fn, contract, unit)
        if target is not None and _same_var(t.var, target):
            return True
        if slot is not None and t.slot == slot:
            return True
    return False


def find_getter_in_contract(contract: ResolvedContract, target: Optional[VariableRef] = None,
                            slot: Optional[int] = None,
                            unit: Optional[CompilationUnit] = None) -> Optional[FunctionDef]:
    """A function returning the target (or ``sload(slot)``), else the implicit
    getter of a public target."""
    if target is None and slot is None:
        raise ValueError("a target variable or a slot is required")
    for fn in contract.functions_in_order():
        if _excluded(fn) or fn.body is None or not fn.returns:
            continue
        if _returns_target(fn, contract, unit, target, slot):
            return fn
    if target is not None and target.scope is Scope.STATE and isinstance(target.decl, StateVarDecl) \
            and target.decl.visibility == "public":
        return implicit_getter(target.decl)
    return None


def _is_literal(expr: object) -> bool:
    if isinstance(expr, Literal):
        return True
    if isinstance(expr, Call) and isinstance(expr.callee, Identifier) and len(expr.args) == 1 \
            and expr.callee.name in ("address", "payable"):
        return _is_literal(expr.args[0])
    return False


def getter_return_nonconstant(getter: FunctionDef) -> bool:
    """True iff the getter returns something and no return yields a literal."""
    if getter.body is None:
        return False
    values = [n.value for n in walk(getter.body) if isinstance(n, ReturnStmt)]
    if not values:
        if not any(p.name for p in getter.returns):
            return False
        values = [None]
    for v in values:
        if v is None:
            # bare return of named results: non-constant unless they are only ever bound to literals
            for node in walk(getter.body):
                if isinstance(node, Assignment) and _is_literal(node.rhs):
                    return False
            continue
        if _is_literal(v):
            return False
    return True


def _reachable(fn: FunctionDef, contract: Optional[ResolvedContract], depth: int) -> list[FunctionDef]:
    out, frontier, seen = [fn], [fn], {id(fn)}
    for _ in range(depth):
        nxt = []
        for f in frontier:
            for callee, _call in internal_callees(f, contract):
                if id(callee) not in seen:
                    seen.add(id(callee))
                    out.append(callee)
                    nxt.append(callee)
        frontier = nxt
    return out


def find_sload_from_hardcoded_storage_slot(fallback: FunctionDef, contract: Optional[ResolvedContract] = None,
                                           unit: Optional[CompilationUnit] = None) -> Optional[tuple[int, bool]]:
    """First ``sload`` of a compile-time slot in the fallback or its callees.

    :returns: ``(slot, known)`` or ``None``
    """
    for fn in _reachable(fallback, contract, MAX_CALL_DEPTH):
        for block in iter_yul_blocks(fn):
            for args in asm_calls(block, "sload"):
                if not args or isinstance(args[0], str):
                    continue
                value = constant_value(args[0], fn, contract, unit)
                if value is not None:
                    return value, is_known_slot(value)
    return None


# ---------------------------------------------------------------------------
# Guards


def _compares_sender(expr: object) -> bool:
    for node in walk(expr):
        if isinstance(node, BinaryOp) and node.op in ("==", "!="):
            for side in (node.left, node.right):
                if isinstance(side, MsgAccess) and side.field_name == "sender":
                    return True
    return False


def has_sender_check(fn: FunctionDef, contract: Optional[ResolvedContract]) -> bool:
    """``fn`` or one of its modifiers compares ``msg.sender``."""
    if fn.body is not None and _compares_sender(fn.body):
        return True
    if contract is not None:
        for inv in fn.modifiers:
            mod = contract.modifiers.get(inv.name)
            if mod is not None and mod.body is not None and _compares_sender(mod.body):
                return True
    return False


def setter_is_guarded(setter: FunctionDef, contract: ResolvedContract, depth: int = MAX_CALL_DEPTH) -> bool:
    """A ``msg.sender`` comparison in the setter, its modifiers, or in callers
    up to ``depth`` levels above it."""
    if has_sender_check(setter, contract):
        return True
    level = [setter]
    seen = {id(setter)}
    for _ in range(depth):
        callers = []
        for fn in contract.functions_in_order():
            if fn.kind is FunctionKind.CONSTRUCTOR or id(fn) in seen:
                continue
            if any(callee in level for callee, _ in internal_callees(fn, contract)):
                seen.add(id(fn))
                callers.append(fn)
        if any(has_sender_check(c, contract) for c in callers):
            return True
        level = callers
        if not level:
            break
    return False


def reaches_sender_check(fn: FunctionDef, contract: Optional[ResolvedContract], depth: int = MAX_CALL_DEPTH) -> bool:
    return any(has_sender_check(f, contract) for f in _reachable(fn, contract, depth))


# ---------------------------------------------------------------------------
# Decision tree


def _search_scope(contract: ResolvedContract, target: Optional[VariableRef],
                  unit: Optional[CompilationUnit]) -> ResolvedContract:
    owner = target.owner_contract if target is not None else None
    if owner is None or owner == contract.name or contract.inherits(owner) or unit is None:
        return contract
    return unit.contract(owner) or contract


def is_upgradeable_proxy(contract: ResolvedContract, finding: ProxyFinding,
                         unit: Optional[CompilationUnit] = None) -> UpgradeabilityVerdict:
    """Decide whether the delegate target of a proxy can be changed."""
    target, slot = finding.delegates_to, finding.slot_literal
    if not finding.is_proxy or (target is None and slot is None):
        return UpgradeabilityVerdict(False, Reason.NOT_PROXY)
    if slot is None and target is not None and target.is_constant:
        return UpgradeabilityVerdict(False, Reason.TARGET_CONSTANT)
    scope = _search_scope(contract, target, unit)
    setters = find_setters(scope, target, slot, unit)
    if setters:
        return UpgradeabilityVerdict(True, Reason.SETTER_FOUND, setters[0], None, slot, tuple(setters),
                                     setter_is_guarded(setters[0], scope), scope.name)
    getter = find_getter_in_contract(scope, target, slot, unit)
    if getter is not None:
        if getter_return_nonconstant(getter):
            return UpgradeabilityVerdict(True, Reason.GETTER_NONCONSTANT, None, getter, slot,
                                         searched_contract=scope.name)
        return UpgradeabilityVerdict(False, Reason.NO_EVIDENCE, None, getter, slot, searched_contract=scope.name)
    fallback = contract.fallback or contract.receive
    hit = find_sload_from_hardcoded_storage_slot(fallback, contract, unit) if fallback is not None else None
    if hit is not None:
        found_slot, known = hit
        if known:
            return UpgradeabilityVerdict(True, Reason.HARDCODED_SLOT_KNOWN, slot=found_slot,
                                         searched_contract=scope.name)
        if found_slot != 0:
            warning = Diagnostic(f"target read from unrecognized storage slot 0x{found_slot:064x} "
                                 "with no setter in source", fallback.span, "warning", "UnknownSlot")
            return UpgradeabilityVerdict(False, Reason.HARDCODED_SLOT_UNKNOWN, slot=found_slot,
                                         searched_contract=scope.name, warnings=(warning,))
    return UpgradeabilityVerdict(False, Reason.NO_EVIDENCE, slot=slot, searched_contract=scope.name)
