"""Delegatecall discovery in fallback functions and target resolution."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field, replace
from typing import Optional

from .consteval import evaluate
from .frontend.ast import (
    Assignment, Call, ContractKind, Diagnostic, Expr, FunctionDef, Identifier,
    IndexAccess, Literal, MemberAccess, MsgAccess, ReturnStmt, TupleExpr, UserTypeName, YulAssign, YulBlock,
    YulCall, YulIdentifier, YulLiteral, walk,
)
from .frontend.yul import parse_yul_expression
from .model import (
    CfgNode, CompilationUnit, NodeType, ResolvedContract, Scope, VariableRef, build_cfg, local_variables,
    yul_statements,
)

MAX_CALL_DEPTH = 2


class Mechanism(str, enum.Enum):
    EXPRESSION_DELEGATECALL = "EXPRESSION_DELEGATECALL"
    ASM_STRING = "ASM_STRING"
    ASM_YUL = "ASM_YUL"
    NONE = "NONE"


@dataclass(frozen=True)
class ExternalLookup:
    """The target comes from ``Iface(receiver).method(args)``.

    :param receiver: variable holding the contract that is queried
    :param resolved_contract: contract in the unit that implements ``method``
    """

    receiver: Optional[VariableRef]
    receiver_type: str
    method: str
    arity: int
    resolved_contract: Optional[str] = None


@dataclass(frozen=True)
class ProxyFinding:
    is_proxy: bool = False
    delegates_to: Optional[VariableRef] = None
    mechanism: Mechanism = Mechanism.NONE
    slot_literal: Optional[int] = None
    function: Optional[FunctionDef] = field(default=None, compare=False)
    external_lookup: Optional[ExternalLookup] = None
    selector_keyed: bool = False
    keyed_lookup: bool = False
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not self.is_proxy and (self.delegates_to is not None or self.mechanism is not Mechanism.NONE):
            raise ValueError("a negative finding has no target and no mechanism")


@dataclass(frozen=True)
class _Trace:
    var: Optional[VariableRef] = None
    slot: Optional[int] = None
    external: Optional[ExternalLookup] = None
    selector_keyed: bool = False
    keyed_lookup: bool = False
    unresolved: Optional[str] = None

    @property
    def useful(self) -> bool:
        return self.var is not None or self.slot is not None or self.external is not None


@dataclass(frozen=True)
class _Ctx:
    """Where an expression is evaluated: function, contract, and parameter bindings."""

    fn: FunctionDef
    contract: Optional[ResolvedContract]
    unit: Optional[CompilationUnit]
    bindings: tuple = ()  # ((param_name, arg_expr, caller_ctx), ...)
    depth: int = 0

    def binding(self, name: str):
        for pname, arg, caller in self.bindings:
            if pname == name:
                return arg, caller
        return None


# ---------------------------------------------------------------------------
# Name resolution


_LOCALS_CACHE: dict[int, tuple[FunctionDef, dict[str, VariableRef]]] = {}


def _locals(fn: FunctionDef) -> dict[str, VariableRef]:
    hit = _LOCALS_CACHE.get(id(fn))
    if hit is not None and hit[0] is fn:
        return hit[1]
    result = local_variables(fn)
    if len(_LOCALS_CACHE) > 4096:
        _LOCALS_CACHE.clear()
    _LOCALS_CACHE[id(fn)] = (fn, result)
    return result


def find_delegate_var_from_name(name: str, parent_function: Optional[FunctionDef],
                                contract: Optional[ResolvedContract] = None,
                                unit: Optional[CompilationUnit] = None) -> Optional[VariableRef]:
    """Resolve ``name``: function locals and parameters, then the contract's
    state variables, then state variables of other contracts in the unit."""
    if not name:
        return None
    # `x_slot` / `x.slot` in assembly refer to the state variable x
    base = re.sub(r"(\.slot|_slot|\.offset|_offset)$", "", name)
    if parent_function is not None:
        ref = _locals(parent_function).get(name)
        if ref is not None:
            return ref
    if contract is not None:
        ref = contract.state_var(name) or contract.state_var(base)
        if ref is not None:
            return ref
    if unit is not None:
        for other in unit:
            if other is contract:
                continue
            ref = other.state_var(name)
            if ref is not None and ref.declaring_contract == other.name:
                return ref
    return None


def internal_callees(fn: FunctionDef, contract: Optional[ResolvedContract]) -> list[tuple[FunctionDef, Call]]:
    """Internal calls made by ``fn``, in source order, resolved through ``contract``."""
    if contract is None or fn.body is None:
        return []
    out = []
    for node in walk(fn.body):
        if isinstance(node, Call) and isinstance(node.callee, Identifier):
            for cand in contract.functions_named(node.callee.name):
                if len(cand.params) == len(node.args) and cand.body is not None and cand is not fn:
                    out.append((cand, node))
                    break
    return out


def _unwrap_conversion(expr: Expr) -> Expr:
    while isinstance(expr, Call) and isinstance(expr.callee, Identifier) and len(expr.args) == 1 \
            and expr.callee.name in ("address", "payable"):
        expr = expr.args[0]
    while isinstance(expr, TupleExpr) and len(expr.elements) == 1 and expr.elements[0] is not None:
        expr = expr.elements[0]
    return expr


# ---------------------------------------------------------------------------
# Tracing


_RAW_ASSIGN_RE = r"(?<![\w$.])(?<!let\s){name}\s*:=\s*([^\n]+)"


def _definitions(ref: VariableRef, fn: FunctionDef) -> list[object]:
    """Expressions assigned to a local, initializer first then source order."""
    defs: list[object] = []
    if ref.initializer is not None and not isinstance(ref.initializer, str):
        defs.append(ref.initializer)
    if fn.body is None:
        return defs
    for node in walk(fn.body):
        if isinstance(node, Assignment) and node.op == "=":
            lhs = node.lhs
            if isinstance(lhs, Identifier) and lhs.name == ref.name:
                defs.append(node.rhs)
        elif isinstance(node, YulBlock):
            if node.is_raw:
                pattern = re.compile(_RAW_ASSIGN_RE.format(name=re.escape(ref.name)))
                for m in pattern.finditer(node.raw_text or ""):
                    parsed = parse_yul_expression(m.group(1).strip())
                    if parsed is not None:
                        defs.append(parsed)
            else:
                for s in yul_statements(node):
                    if isinstance(s, YulAssign) and len(s.names) == 1 and s.names[0] == ref.name:
                        defs.append(s.value)
    return defs


def _constant_lookup(ctx: _Ctx, seen: frozenset = frozenset()):
    def lookup(name: str) -> Optional[int]:
        if name in seen or len(seen) > 16:
            return None
        inner = _constant_lookup(ctx, seen | {name})
        if "." in name and ctx.unit is not None:
            cname, vname = name.split(".", 1)
            other = ctx.unit.contract(cname)
            if other is not None:
                ref = other.state_var(vname)
                if ref is not None and ref.is_constant:
                    return evaluate(ref.initializer, _constant_lookup(replace(ctx, contract=other), seen | {name}))
            return None
        bound = ctx.binding(name)
        if bound is not None:
            arg, caller = bound
            return evaluate(arg, _constant_lookup(caller, seen | {name}))
        ref = find_delegate_var_from_name(name, ctx.fn, ctx.contract, None)
        if ref is None:
            return None
        if ref.scope is Scope.STATE:
            return evaluate(ref.initializer, inner) if ref.is_constant else None
        defs = _definitions(ref, ctx.fn)
        if len(defs) == 1:
            return evaluate(defs[0], inner)
        return None
    return lookup


def _slot_var(expr: object, ctx: _Ctx, guard: int = 0) -> Optional[VariableRef]:
    """The constant state variable naming a slot, following local aliases."""
    if guard > 8:
        return None
    if isinstance(expr, (Identifier, YulIdentifier)):
        bound = ctx.binding(expr.name)
        if bound is not None:
            return _slot_var(bound[0], bound[1], guard + 1)
        ref = find_delegate_var_from_name(expr.name, ctx.fn, ctx.contract, None)
        if ref is None:
            return None
        if ref.scope is Scope.STATE:
            return ref if ref.is_constant else None
        defs = _definitions(ref, ctx.fn)
        if len(defs) == 1:
            return _slot_var(defs[0], ctx, guard + 1)
    if isinstance(expr, MemberAccess) and isinstance(expr.expression, Identifier) and ctx.unit is not None:
        other = ctx.unit.contract(expr.expression.name)
        if other is not None:
            ref = other.state_var(expr.member)
            if ref is not None and ref.is_constant:
                return ref
    if isinstance(expr, Call) and isinstance(expr.callee, Identifier) and len(expr.args) == 1 \
            and expr.callee.name in ("bytes32", "uint256", "uint"):
        return _slot_var(expr.args[0], ctx, guard + 1)
    return None


class _Tracer:
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        self.active: set = set()

    def trace(self, expr: object, ctx: _Ctx) -> _Trace:
        key = (id(expr), id(ctx.fn), ctx.depth)
        if key in self.active or ctx.depth > MAX_CALL_DEPTH + 2:
            return _Trace(unresolved="recursion")
        self.active.add(key)
        try:
            return self._trace(expr, ctx)
        finally:
            self.active.discard(key)

    def _trace(self, expr: object, ctx: _Ctx) -> _Trace:
        if isinstance(expr, Expr.__args__) and not isinstance(expr, (Identifier,)):
            expr = _unwrap_conversion(expr)
        if isinstance(expr, (Identifier, YulIdentifier)):
            return self._trace_name(expr.name, ctx)
        if isinstance(expr, YulCall):
            if expr.name == "sload" and len(expr.args) == 1:
                arg = expr.args[0]
                slot = evaluate(arg, _constant_lookup(ctx))
                var = _slot_var(arg, ctx)
                if var is None and isinstance(arg, YulIdentifier) and arg.name.endswith((".slot", "_slot")):
                    var = find_delegate_var_from_name(arg.name, ctx.fn, ctx.contract, ctx.unit)
                    if var is not None and var.scope is not Scope.STATE:
                        var = None
                if slot is None and var is None:
                    return _Trace(unresolved="sload of an unrecognized slot expression")
                return _Trace(var=var, slot=slot)
            if expr.name in ("and", "or") and len(expr.args) == 2:
                # masking: and(sload(s), 0xff..ff)
                for a in expr.args:
                    t = self.trace(a, ctx)
                    if t.useful:
                        return t
            return _Trace(unresolved=f"assembly call {expr.name}")
        if isinstance(expr, YulLiteral) or isinstance(expr, Literal):
            return _Trace(unresolved="literal target")
        if isinstance(expr, IndexAccess):
            return self._trace_index(expr, ctx)
        if isinstance(expr, MemberAccess):
            # struct field of a looked-up record, e.g. facets[msg.sig].facetAddress
            if isinstance(expr.expression, IndexAccess):
                return self._trace_index(expr.expression, ctx)
            if isinstance(expr.expression, Identifier) and ctx.unit is not None:
                other = ctx.unit.contract(expr.expression.name)
                if other is not None:
                    ref = other.state_var(expr.member)
                    if ref is not None:
                        return _Trace(var=ref)
            return _Trace(unresolved="member access target")
        if isinstance(expr, Call):
            return self._trace_call(expr, ctx)
        return _Trace(unresolved=f"unsupported target expression {type(expr).__name__}")

    def _trace_name(self, name: str, ctx: _Ctx) -> _Trace:
        bound = ctx.binding(name)
        if bound is not None:
            arg, caller = bound
            return self.trace(arg, caller)
        ref = find_delegate_var_from_name(name, ctx.fn, ctx.contract, ctx.unit)
        if ref is None:
            return _Trace(unresolved=f"unknown identifier {name}")
        if ref.scope is Scope.STATE:
            return _Trace(var=ref)
        if ref.is_constant:
            return _Trace(var=ref)
        for d in _definitions(ref, ctx.fn):
            t = self.trace(d, ctx)
            if t.var is not None or t.external is not None:
                return t
            if t.slot is not None:
                return replace(t, var=ref)
        # a named return assigned inside a callee is handled by the caller; keep the local
        return _Trace(var=ref)

    def _trace_index(self, expr: IndexAccess, ctx: _Ctx) -> _Trace:
        base = expr.base
        if isinstance(base, MemberAccess):
            # ds.facets[msg.sig]: the struct holding the mapping
            base_name = base.member
        elif isinstance(base, Identifier):
            base_name = base.name
        else:
            return _Trace(unresolved="indexed target")
        ref = find_delegate_var_from_name(base_name, ctx.fn, ctx.contract, ctx.unit)
        if ref is None and isinstance(base, MemberAccess) and isinstance(base.expression, Identifier):
            ref = find_delegate_var_from_name(base.expression.name, ctx.fn, ctx.contract, ctx.unit)
        if ref is None:
            return _Trace(unresolved=f"unknown mapping {base_name}")
        if ref.scope is not Scope.STATE:
            t = self._trace_name(ref.name, ctx)
            if t.var is not None and t.var.scope is Scope.STATE:
                ref = t.var
        keyed_by_sig = self._is_msg_sig(expr.index, ctx)
        return _Trace(var=ref, selector_keyed=keyed_by_sig, keyed_lookup=not keyed_by_sig)

    def _is_msg_sig(self, index: object, ctx: _Ctx) -> bool:
        if isinstance(index, MsgAccess) and index.field_name == "sig":
            return True
        if isinstance(index, Identifier):
            bound = ctx.binding(index.name)
            if bound is not None:
                return self._is_msg_sig(bound[0], bound[1])
            ref = _locals(ctx.fn).get(index.name)
            if ref is not None:
                return any(self._is_msg_sig(d, ctx) for d in _definitions(ref, ctx.fn))
        if isinstance(index, Call) and isinstance(index.callee, Identifier) and index.callee.name == "bytes4":
            return True
        return False

    def _trace_call(self, expr: Call, ctx: _Ctx) -> _Trace:
        callee = expr.callee
        if isinstance(callee, Identifier) and ctx.contract is not None:
            for cand in ctx.contract.functions_named(callee.name):
                if len(cand.params) == len(expr.args) and cand.body is not None:
                    return self._trace_returns(cand, expr.args, ctx, ctx.contract)
            return _Trace(unresolved=f"call to {callee.name}")
        if isinstance(callee, MemberAccess):
            method = callee.member
            recv_expr = callee.expression
            iface = None
            if isinstance(recv_expr, Call) and isinstance(recv_expr.callee, Identifier) and len(recv_expr.args) == 1 \
                    and recv_expr.callee.name[:1].isupper():
                iface = recv_expr.callee.name
                recv_expr = recv_expr.args[0]
            recv = self.trace(recv_expr, ctx)
            if iface is None and recv.var is not None and isinstance(recv.var.type_name, UserTypeName):
                iface = recv.var.type_name.path.rsplit(".", 1)[-1]
            if iface is None:
                return _Trace(unresolved=f"call to {method} on an untyped receiver")
            lookup = ExternalLookup(recv.var, iface, method, len(expr.args))
            resolved = self._resolve_external(lookup, ctx)
            if resolved is not None:
                other, fn = resolved
                lookup = replace(lookup, resolved_contract=other.name)
                t = self._trace_returns(fn, (), _Ctx(fn, other, ctx.unit, (), ctx.depth), other, bind=False)
                if t.var is not None and t.var.scope is Scope.STATE:
                    return replace(t, external=lookup)
            self.diagnostics.append(Diagnostic(
                f"target comes from external call {iface}.{method}; not resolved to a variable",
                expr.span, "info", "UnresolvedTarget"))
            return _Trace(external=lookup)
        return _Trace(unresolved="call target")

    def _resolve_external(self, lookup: ExternalLookup, ctx: _Ctx):
        if ctx.unit is None:
            return None
        candidates = []
        for other in ctx.unit:
            if other.kind in (ContractKind.INTERFACE, ContractKind.LIBRARY) or other is ctx.contract:
                continue
            for fn in other.functions_named(lookup.method):
                if len(fn.params) == lookup.arity and fn.body is not None:
                    preferred = other.name == lookup.receiver_type or other.inherits(lookup.receiver_type)
                    candidates.append((0 if preferred else 1, len(candidates), other, fn))
                    break
        if not candidates:
            return None
        candidates.sort(key=lambda c: (c[0], c[1]))
        return candidates[0][2], candidates[0][3]

    def _trace_returns(self, fn: FunctionDef, args, ctx: _Ctx, contract: ResolvedContract,
                       bind: bool = True) -> _Trace:
        bindings = tuple((p.name, a, ctx) for p, a in zip(fn.params, args) if p.name) if bind else ()
        inner = _Ctx(fn, contract, ctx.unit, bindings, ctx.depth + 1)
        if inner.depth > MAX_CALL_DEPTH + 2:
            return _Trace(unresolved="call depth")
        results = []
        for node in walk(fn.body):
            if isinstance(node, ReturnStmt) and node.value is not None:
                results.append(self.trace(node.value, inner))
        for p in fn.returns:
            if p.name:
                results.append(self._trace_name(p.name, inner))
        for t in results:
            if t.var is not None and t.var.scope is Scope.STATE:
                return t
        for t in results:
            if t.useful:
                return t
        return results[0] if results else _Trace(unresolved=f"{fn.name} returns nothing traceable")


# ---------------------------------------------------------------------------
# Matchers


def _delegatecall_receivers(expr: object) -> list[Expr]:
    out = []
    for node in walk(expr):
        if isinstance(node, MemberAccess) and node.member == "delegatecall":
            out.append(node.expression)
    return out


def _delegatecall_in_yul(asm: YulBlock) -> list[YulCall]:
    return [n for n in walk(asm.yul_ast) if isinstance(n, YulCall) and n.name == "delegatecall"]


_DELEGATECALL_TOKEN = re.compile(r"\bdelegatecall\s*\(")


def _split_args(text: str) -> list[str]:
    args, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            args.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if cur:
        args.append("".join(cur).strip())
    return args


def raw_call_arguments(raw_text: str, name: str = "delegatecall") -> list[list[str]]:
    """Argument texts of every ``name(...)`` call in a string assembly block.

    Lines are scanned one at a time; a call spanning several lines is joined
    until its parentheses balance.
    """
    token = _DELEGATECALL_TOKEN if name == "delegatecall" else re.compile(rf"\b{re.escape(name)}\s*\(")
    lines = raw_text.split("\n")
    out = []
    for i, line in enumerate(lines):
        for m in token.finditer(line):
            text = line[m.end():]
            j = i
            while text.count("(") + 1 > text.count(")") and j + 1 < len(lines):
                j += 1
                text += " " + lines[j]
            depth, end = 1, None
            for k, ch in enumerate(text):
                if ch == "(":
                    depth += 1
                elif ch == ")":
                    depth -= 1
                    if depth == 0:
                        end = k
                        break
            if end is None:
                continue
            out.append(_split_args(text[:end]))
    return out


def find_delegatecall_in_asm(asm: YulBlock, parent_function: Optional[FunctionDef] = None, *,
                             contract: Optional[ResolvedContract] = None,
                             unit: Optional[CompilationUnit] = None,
                             _ctx: Optional[_Ctx] = None, _tracer: Optional[_Tracer] = None):
    """Search an assembly block for ``delegatecall`` and resolve its second argument.

    :returns: ``(found, target_variable, slot_literal)``
    """
    parent_function = parent_function or asm.parent_function
    tracer = _tracer or _Tracer([])
    ctx = _ctx or (_Ctx(parent_function, contract, unit) if parent_function is not None else None)
    targets = _asm_targets(asm)
    if not targets:
        return False, None, None
    for target in targets:
        if target is None or isinstance(target, str) or ctx is None:
            tracer.diagnostics.append(Diagnostic("delegatecall target not recognized", asm.span, "info",
                                                 "UnresolvedTarget"))
            continue
        t = tracer.trace(target, ctx)
        if t.useful:
            return True, t.var, t.slot
        if t.unresolved:
            tracer.diagnostics.append(Diagnostic(f"delegatecall target not resolved: {t.unresolved}", asm.span,
                                                 "info", "UnresolvedTarget"))
    return True, None, None


def find_delegatecall_in_expression(node: CfgNode, *, contract: Optional[ResolvedContract] = None,
                                    unit: Optional[CompilationUnit] = None):
    """Match ``<receiver>.delegatecall(...)`` (call options and ``.value``/``.gas``
    chains included) in an expression node.

    The receiver is resolved when it names a variable; nested calls are left
    unresolved.

    :returns: ``(found, target_variable)``
    """
    for expr in node.expressions:
        receivers = _delegatecall_receivers(expr)
        if not receivers:
            continue
        recv = _unwrap_conversion(receivers[0])
        if isinstance(recv, Identifier) and node.function is not None:
            return True, find_delegate_var_from_name(recv.name, node.function, contract, unit)
        if isinstance(recv, MemberAccess) and isinstance(recv.expression, Identifier) and unit is not None:
            other = unit.contract(recv.expression.name)
            if other is not None:
                return True, other.state_var(recv.member)
        return True, None
    return False, None


# ---------------------------------------------------------------------------
# Driver


def _entry_points(contract: ResolvedContract) -> list[FunctionDef]:
    return [f for f in (contract.fallback, contract.receive) if f is not None and f.body is not None]


def is_proxy(contract: ResolvedContract, unit: Optional[CompilationUnit] = None) -> ProxyFinding:
    """Decide whether ``contract`` forwards calls with ``delegatecall`` and to what.

    The fallback and receive functions are searched, then the internal
    functions they call, up to :data:`MAX_CALL_DEPTH` levels.
    """
    entries = _entry_points(contract)
    if not entries:
        return ProxyFinding()
    diagnostics: list[Diagnostic] = []
    tracer = _Tracer(diagnostics)
    best: Optional[ProxyFinding] = None
    visited: set = set()

    def consider(finding: ProxyFinding) -> None:
        nonlocal best
        if best is None or (best.delegates_to is None and best.slot_literal is None
                            and (finding.delegates_to is not None or finding.slot_literal is not None
                                 or (best.external_lookup is None and finding.external_lookup is not None))):
            best = finding

    def done() -> bool:
        return best is not None and best.delegates_to is not None

    def search(ctx: _Ctx) -> None:
        key = (id(ctx.fn), ctx.bindings and tuple(id(b[1]) for b in ctx.bindings))
        if key in visited:
            return
        visited.add(key)
        for node in build_cfg(ctx.fn):
            if done():
                return
            # expression-level match on every node carrying Solidity expressions
            for expr in node.expressions:
                for recv in _delegatecall_receivers(expr):
                    t = tracer.trace(recv, ctx)
                    if not t.useful:
                        diagnostics.append(Diagnostic(f"delegatecall receiver not resolved: {t.unresolved}",
                                                      getattr(expr, "span", None) or ctx.fn.span, "info",
                                                      "UnresolvedTarget"))
                    consider(_finding(t, Mechanism.EXPRESSION_DELEGATECALL, ctx.fn))
            if node.node_type is NodeType.ASSEMBLY and node.inline_asm is not None:
                asm = node.inline_asm
                targets = _asm_targets(asm)
                mech = Mechanism.ASM_STRING if asm.is_raw else Mechanism.ASM_YUL
                for target in targets:
                    if target is None or isinstance(target, str):
                        diagnostics.append(Diagnostic("delegatecall target not recognized", asm.span, "info",
                                                      "UnresolvedTarget"))
                        consider(_finding(_Trace(), mech, ctx.fn))
                        continue
                    t = tracer.trace(target, ctx)
                    if not t.useful:
                        diagnostics.append(Diagnostic(f"delegatecall target not resolved: {t.unresolved}",
                                                      asm.span, "info", "UnresolvedTarget"))
                    consider(_finding(t, mech, ctx.fn))
        if done() or ctx.depth >= MAX_CALL_DEPTH:
            return
        for callee, call in internal_callees(ctx.fn, contract):
            bindings = tuple((p.name, a, ctx) for p, a in zip(callee.params, call.args) if p.name)
            search(_Ctx(callee, contract, unit, bindings, ctx.depth + 1))
            if done():
                return

    for entry in entries:
        search(_Ctx(entry, contract, unit))
        if done():
            break
    if best is None:
        return ProxyFinding()
    return replace(best, diagnostics=tuple(_dedupe(diagnostics)))


def _asm_targets(asm: YulBlock) -> list[object]:
    targets: list[object] = []
    if asm.is_raw:
        for args in raw_call_arguments(asm.raw_text or ""):
            if len(args) >= 2:
                parsed = parse_yul_expression(args[1])
                targets.append(parsed if parsed is not None else args[1])
            else:
                targets.append(None)
    else:
        for call in _delegatecall_in_yul(asm):
            targets.append(call.args[1] if len(call.args) >= 2 else None)
    return targets


def _finding(t: _Trace, mechanism: Mechanism, fn: FunctionDef) -> ProxyFinding:
    return ProxyFinding(True, t.var, mechanism, t.slot, fn, t.external, t.selector_keyed, t.keyed_lookup)


def _dedupe(diags: list[Diagnostic]) -> list[Diagnostic]:
    seen, out = set(), []
    for d in diags:
        key = (d.message, d.code)
        if key not in seen:
            seen.add(key)
            out.append(d)
    return out


def delegatecall_in_function(fn: FunctionDef) -> bool:
    """Whether ``fn``'s own body contains a delegatecall (no call following)."""
    for node in build_cfg(fn):
        if any(_delegatecall_receivers(e) for e in node.expressions):
            return True
        if node.inline_asm is not None and _asm_targets(node.inline_asm):
            return True
    return False


# ---------------------------------------------------------------------------
# Helpers shared with the upgradeability checks


def trace_expression(expr: object, fn: FunctionDef, contract: Optional[ResolvedContract],
                     unit: Optional[CompilationUnit]) -> _Trace:
    """Follow ``expr`` back to a state variable, storage slot or external lookup."""
    return _Tracer([]).trace(expr, _Ctx(fn, contract, unit))


def constant_value(expr: object, fn: FunctionDef, contract: Optional[ResolvedContract],
                   unit: Optional[CompilationUnit]) -> Optional[int]:
    """Compile-time value of ``expr`` evaluated inside ``fn``."""
    return evaluate(expr, _constant_lookup(_Ctx(fn, contract, unit)))


def state_target_of(expr: object, fn: FunctionDef, contract: Optional[ResolvedContract],
                    unit: Optional[CompilationUnit]) -> Optional[VariableRef]:
    """State variable a storage reference such as ``x``, ``x.slot`` or ``x_slot`` names."""
    name = None
    if isinstance(expr, (Identifier, YulIdentifier)):
        name = expr.name
    elif isinstance(expr, MemberAccess) and isinstance(expr.expression, Identifier) and expr.expression.name == "this":
        name = expr.member
    if name is None:
        return None
    ref = find_delegate_var_from_name(name, fn, contract, unit)
    if ref is not None and ref.scope is Scope.STATE:
        return ref
    return None


def asm_calls(asm: YulBlock, name: str) -> list[list[object]]:
    """Arguments of each ``name(...)`` call in an assembly block.

    For string blocks each argument is parsed when possible and left as text
    otherwise.
    """
    out: list[list[object]] = []
    if asm.is_raw:
        for args in raw_call_arguments(asm.raw_text or "", name):
            parsed = []
            for a in args:
                e = parse_yul_expression(a)
                parsed.append(e if e is not None else a)
            out.append(parsed)
    else:
        for n in walk(asm.yul_ast):
            if isinstance(n, YulCall) and n.name == name:
                out.append(list(n.args))
    return out
