"""Resolved contract model: compilation units, inheritance, variables and a
flat per-function node list.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union

from .frontend.ast import (
    ArrayTypeName, AssemblyStmt, Block, Call, ContractDef, ContractKind, Diagnostic, ElementaryTypeName,
    EmitStmt, EnumDef, Expr, ExpressionStmt, ForStmt, FunctionDef, FunctionKind, FunctionTypeName,
    Identifier, IfStmt, Literal, LiteralKind, MappingTypeName, RequireStmt, ReturnStmt,
    RevertStmt, SourceUnit, StateVarDecl, Stmt, StructDef, TypeName, UserTypeName,
    VarDeclStmt, WhileStmt, YulBlock, YulBody, YulIf, YulLet, YulLiteral, YulSwitch, walk,
)


class Scope(str, enum.Enum):
    STATE = "state"
    LOCAL = "local"
    PARAMETER = "parameter"


@dataclass(frozen=True)
class VariableRef:
    """A named storage location visible to the analysis.

    :param name: identifier as written in source
    :param scope: state, local or parameter
    :param declaring_contract: contract declaring a state variable, ``None`` otherwise
    :param function: full name of the owning function for locals and parameters
    :param is_constant: constant/immutable state var, or a local bound to a literal
    """

    name: str
    scope: Scope
    declaring_contract: Optional[str] = None
    function: Optional[str] = None
    is_constant: bool = False
    type_name: Optional[TypeName] = field(default=None, compare=False)
    decl: object = field(default=None, compare=False, repr=False)
    initializer: object = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if (self.scope is Scope.STATE) != (self.declaring_contract is not None):
            raise ValueError("declaring_contract is set exactly for state variables")

    @property
    def owner_contract(self) -> Optional[str]:
        """Declaring contract for state vars, the owning function's contract otherwise."""
        if self.declaring_contract is not None:
            return self.declaring_contract
        if self.function:
            return self.function.split(".", 1)[0]
        return None

    @property
    def is_mapping(self) -> bool:
        return isinstance(self.type_name, MappingTypeName)

    @property
    def display(self) -> str:
        owner = self.owner_contract
        return f"{owner}.{self.name}" if owner else self.name

    def __str__(self) -> str:
        return self.display


class NodeType(str, enum.Enum):
    ENTRY = "ENTRY"
    EXPRESSION = "EXPRESSION"
    VARIABLE_DECL = "VARIABLE_DECL"
    IF = "IF"
    RETURN = "RETURN"
    REQUIRE = "REQUIRE"
    ASSEMBLY = "ASSEMBLY"
    OTHER = "OTHER"


@dataclass(frozen=True)
class CfgNode:
    node_type: NodeType
    payload: object = None
    inline_asm: Optional[YulBlock] = None
    function: Optional[FunctionDef] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if (self.node_type is NodeType.ASSEMBLY) != (self.inline_asm is not None):
            raise ValueError("inline_asm is populated exactly for ASSEMBLY nodes")

    @property
    def expressions(self) -> list[Expr]:
        """Solidity expressions carried directly by this node."""
        p = self.payload
        out: list = []
        if isinstance(p, ExpressionStmt):
            out = [p.expression]
        elif isinstance(p, VarDeclStmt):
            out = [p.initializer]
        elif isinstance(p, IfStmt):
            out = [p.condition]
        elif isinstance(p, ReturnStmt):
            out = [p.value]
        elif isinstance(p, RequireStmt):
            out = [p.condition, p.message]
        elif isinstance(p, ForStmt):
            out = [p.condition, p.post]
        elif isinstance(p, WhileStmt):
            out = [p.condition]
        elif isinstance(p, EmitStmt):
            out = [p.event]
        elif isinstance(p, RevertStmt):
            out = [p.error]
        return [e for e in out if e is not None]


def build_cfg(function: FunctionDef) -> list[CfgNode]:
    """Flatten ``function``'s body into an ordered node list headed by ENTRY."""
    nodes = [CfgNode(NodeType.ENTRY, function=function)]
    if function.body is not None:
        _flatten(function.body, function, nodes)
    return nodes


def _flatten(stmt: Stmt, fn: FunctionDef, out: list[CfgNode]) -> None:
    if isinstance(stmt, Block):
        for s in stmt.statements:
            _flatten(s, fn, out)
    elif isinstance(stmt, ExpressionStmt):
        out.append(CfgNode(NodeType.EXPRESSION, stmt, function=fn))
    elif isinstance(stmt, VarDeclStmt):
        out.append(CfgNode(NodeType.VARIABLE_DECL, stmt, function=fn))
    elif isinstance(stmt, IfStmt):
        out.append(CfgNode(NodeType.IF, stmt, function=fn))
        _flatten(stmt.then_branch, fn, out)
        if stmt.else_branch is not None:
            _flatten(stmt.else_branch, fn, out)
    elif isinstance(stmt, ReturnStmt):
        out.append(CfgNode(NodeType.RETURN, stmt, function=fn))
    elif isinstance(stmt, RequireStmt):
        out.append(CfgNode(NodeType.REQUIRE, stmt, function=fn))
    elif isinstance(stmt, AssemblyStmt):
        out.append(CfgNode(NodeType.ASSEMBLY, stmt.block, inline_asm=stmt.block, function=fn))
    elif isinstance(stmt, ForStmt):
        if stmt.init is not None:
            _flatten(stmt.init, fn, out)
        out.append(CfgNode(NodeType.OTHER, stmt, function=fn))
        _flatten(stmt.body, fn, out)
    elif isinstance(stmt, WhileStmt):
        out.append(CfgNode(NodeType.OTHER, stmt, function=fn))
        _flatten(stmt.body, fn, out)
    else:
        out.append(CfgNode(NodeType.OTHER, stmt, function=fn))


# ---------------------------------------------------------------------------
# Types and signatures

_ALIASES = {"uint": "uint256", "int": "int256", "byte": "bytes1", "ufixed": "ufixed128x18", "fixed": "fixed128x18"}


def canonical_type(t: Optional[TypeName]) -> str:
    """ABI-ish canonical spelling used for override keys and selectors."""
    if t is None:
        return ""
    if isinstance(t, ElementaryTypeName):
        name = t.name.replace("address payable", "address")
        return _ALIASES.get(name, name)
    if isinstance(t, UserTypeName):
        return t.path.rsplit(".", 1)[-1]
    if isinstance(t, ArrayTypeName):
        from .frontend.printer import print_expr
        length = print_expr(t.length) if t.length is not None else ""
        return f"{canonical_type(t.base)}[{length}]"
    if isinstance(t, MappingTypeName):
        return f"mapping({canonical_type(t.key)}=>{canonical_type(t.value)})"
    if isinstance(t, FunctionTypeName):
        return "function"
    return str(t)


def signature_key(fn: FunctionDef) -> str:
    if fn.kind is FunctionKind.FALLBACK:
        return "<fallback>"
    if fn.kind is FunctionKind.RECEIVE:
        return "<receive>"
    if fn.kind is FunctionKind.CONSTRUCTOR:
        return f"<constructor:{fn.declaring_contract}>"
    return f"{fn.name}({','.join(canonical_type(p.type_name) for p in fn.params)})"


# ---------------------------------------------------------------------------
# Variables


def _is_literal_address(expr: object) -> bool:
    if isinstance(expr, Literal):
        return expr.kind in (LiteralKind.ADDRESS, LiteralKind.NUMBER, LiteralKind.HEX)
    if isinstance(expr, YulLiteral):
        return expr.kind in ("hex", "number")
    if isinstance(expr, Call) and isinstance(expr.callee, Identifier) and len(expr.args) == 1:
        if expr.callee.name in ("address", "payable"):
            return _is_literal_address(expr.args[0])
    return False


def state_variable_ref(decl: StateVarDecl) -> VariableRef:
    return VariableRef(decl.name, Scope.STATE, decl.declaring_contract, None, decl.is_constant,
                       decl.type_name, decl, decl.initializer)


_RAW_LET_RE = re.compile(r"\blet\s+([A-Za-z_$][\w$]*)\s*:=\s*([^\n]+)")


def iter_yul_blocks(fn: FunctionDef) -> Iterator[YulBlock]:
    if fn.body is None:
        return
    for node in walk(fn.body):
        if isinstance(node, AssemblyStmt):
            yield node.block


def _yul_statements(body: YulBody) -> Iterator[object]:
    for s in body.statements:
        yield s
        if isinstance(s, YulBody):
            yield from _yul_statements(s)
        elif isinstance(s, YulIf):
            yield from _yul_statements(s.body)
        elif isinstance(s, YulSwitch):
            for case in s.cases:
                yield from _yul_statements(case.body)


def yul_statements(block: YulBlock) -> Iterator[object]:
    """All statements of a parsed assembly block, nested ones included."""
    if block.yul_ast is not None:
        yield from _yul_statements(block.yul_ast)


def local_variables(fn: FunctionDef) -> dict[str, VariableRef]:
    """Parameters, named returns, locals and assembly ``let`` bindings of ``fn``.

    The first declaration of a name wins.
    """
    out: dict[str, VariableRef] = {}
    owner = fn.full_name

    def add(ref: VariableRef) -> None:
        out.setdefault(ref.name, ref)

    for p in tuple(fn.params) + tuple(fn.returns):
        if p.name:
            add(VariableRef(p.name, Scope.PARAMETER, None, owner, False, p.type_name, p))
    if fn.body is None:
        return out
    for node in walk(fn.body):
        if isinstance(node, VarDeclStmt):
            init = node.initializer if len(node.declarations) == 1 and not node.is_tuple else None
            for d in node.declarations:
                if d is not None and d.name:
                    add(VariableRef(d.name, Scope.LOCAL, None, owner, _is_literal_address(init),
                                    d.type_name, d, init))
        elif isinstance(node, AssemblyStmt):
            block = node.block
            if block.is_raw:
                for m in _RAW_LET_RE.finditer(block.raw_text or ""):
                    value = m.group(2).strip()
                    from .frontend.yul import parse_yul_expression
                    parsed = parse_yul_expression(value)
                    add(VariableRef(m.group(1), Scope.LOCAL, None, owner, _is_literal_address(parsed),
                                    None, block, parsed if parsed is not None else value))
            else:
                for s in yul_statements(block):
                    if isinstance(s, YulLet):
                        init = s.value if len(s.names) == 1 else None
                        for name in s.names:
                            add(VariableRef(name, Scope.LOCAL, None, owner, _is_literal_address(init),
                                            None, s, init))
    return out


# ---------------------------------------------------------------------------
# Compilation unit


class ResolvedContract:
    """A contract with its inheritance resolved.

    :param definition: the parsed contract
    :param linearization: most-base-first, self last
    """

    def __init__(self, definition: ContractDef, file_id: str):
        self.definition = definition
        self.file_id = file_id
        self.linearization: list[ResolvedContract] = []
        self.all_state_vars: list[VariableRef] = []
        self.all_functions: dict[str, FunctionDef] = {}
        self.modifiers: dict[str, FunctionDef] = {}
        self.unresolved_bases: list[str] = []
        self.diagnostics: list[Diagnostic] = []
        self.unit: Optional["CompilationUnit"] = None

    # compatibility alias for the field name used in reports
    @property
    def def_(self) -> ContractDef:
        return self.definition

    @property
    def name(self) -> str:
        return self.definition.name

    @property
    def kind(self) -> ContractKind:
        return self.definition.kind

    @property
    def fallback(self) -> Optional[FunctionDef]:
        return self.all_functions.get("<fallback>")

    @property
    def receive(self) -> Optional[FunctionDef]:
        return self.all_functions.get("<receive>")

    @property
    def constructor(self) -> Optional[FunctionDef]:
        return self.all_functions.get(f"<constructor:{self.name}>")

    def inherits(self, name: str) -> bool:
        return any(c.name == name for c in self.linearization)

    def functions_in_order(self) -> list[FunctionDef]:
        """Effective functions, ordered by linearization then declaration."""
        effective = set(id(f) for f in self.all_functions.values())
        out = []
        for c in self.linearization:
            for f in c.definition.functions:
                if id(f) in effective:
                    out.append(f)
        return out

    def functions_named(self, name: str) -> list[FunctionDef]:
        return [f for f in self.functions_in_order() if f.name == name and f.kind is FunctionKind.FUNCTION]

    def state_var(self, name: str) -> Optional[VariableRef]:
        # most-derived declaration shadows
        for v in reversed(self.all_state_vars):
            if v.name == name:
                return v
        return None

    def __repr__(self) -> str:
        return f"ResolvedContract({self.name})"


class CompilationUnit:
    """All contracts across the provided source units."""

    def __init__(self) -> None:
        self.contracts: dict[str, ResolvedContract] = {}
        self.diagnostics: list[Diagnostic] = []
        self.source_units: list[SourceUnit] = []
        self.structs: dict[str, StructDef] = {}
        self.enums: dict[str, EnumDef] = {}

    @property
    def definitions(self) -> dict[str, ContractDef]:
        return {n: c.definition for n, c in self.contracts.items()}

    def contract(self, name: str) -> Optional[ResolvedContract]:
        return self.contracts.get(name)

    def __iter__(self) -> Iterator[ResolvedContract]:
        return iter(self.contracts.values())


def _base_name(name: str) -> str:
    return name.rsplit(".", 1)[-1]


def linearize_inheritance(contract: ContractDef,
                          unit: Union[CompilationUnit, Mapping[str, ContractDef]],
                          diagnostics: Optional[list[Diagnostic]] = None) -> list[ContractDef]:
    """C3 linearization, most-base-first with ``contract`` last.

    Unresolvable bases are skipped.  If C3 has no solution the depth-first
    left-to-right order is used instead and a diagnostic is recorded.
    """
    defs = unit.definitions if isinstance(unit, CompilationUnit) else unit
    diags = diagnostics if diagnostics is not None else []
    memo: dict[str, list[ContractDef]] = {}

    def bases_of(c: ContractDef) -> list[ContractDef]:
        out = []
        for b in c.bases:
            d = defs.get(_base_name(b))
            if d is not None and d.name != c.name:
                out.append(d)
        return out

    def c3(c: ContractDef, stack: tuple[str, ...]) -> Optional[list[ContractDef]]:
        """Most-derived-first (Python MRO style) with bases taken right to left."""
        if c.name in memo:
            return memo[c.name]
        if c.name in stack:
            return None
        parents = list(reversed(bases_of(c)))
        seqs = []
        for p in parents:
            lin = c3(p, stack + (c.name,))
            if lin is None:
                return None
            seqs.append(list(lin))
        seqs.append(list(parents))
        result = [c]
        while True:
            seqs = [s for s in seqs if s]
            if not seqs:
                break
            for s in seqs:
                head = s[0]
                if not any(head.name in (x.name for x in t[1:]) for t in seqs):
                    break
            else:
                return None
            result.append(head)
            for s in seqs:
                if s[0].name == head.name:
                    del s[0]
        memo[c.name] = result
        return result

    lin = c3(contract, ())
    if lin is not None:
        return list(reversed(lin))
    diags.append(Diagnostic(f"inheritance of {contract.name} has no C3 linearization; using depth-first order",
                            contract.span, "warning", "LinearizationFailed"))
    order: list[ContractDef] = []
    seen: set[str] = set()

    def dfs(c: ContractDef) -> None:
        if c.name in seen:
            return
        seen.add(c.name)
        for b in bases_of(c):
            dfs(b)
        order.append(c)

    dfs(contract)
    return order


def resolve_compilation_unit(units: Iterable[SourceUnit]) -> CompilationUnit:
    """Resolve every contract of ``units`` against the others."""
    units = list(units)
    if not units:
        raise ValueError("at least one source unit is required")
    cu = CompilationUnit()
    cu.source_units = units
    for u in units:
        for s in u.structs:
            cu.structs.setdefault(s.name, s)
        for e in u.enums:
            cu.enums.setdefault(e.name, e)
        for c in u.contracts:
            if c.name in cu.contracts:
                cu.diagnostics.append(Diagnostic(
                    f"duplicate contract name {c.name} in {u.file_id}; keeping the one from "
                    f"{cu.contracts[c.name].file_id}", c.span, "warning", "DuplicateContractName"))
                continue
            rc = ResolvedContract(c, u.file_id)
            rc.unit = cu
            cu.contracts[c.name] = rc
            for s in c.structs:
                cu.structs.setdefault(f"{c.name}.{s.name}", s)
                cu.structs.setdefault(s.name, s)
            for e in c.enums:
                cu.enums.setdefault(f"{c.name}.{e.name}", e)
                cu.enums.setdefault(e.name, e)

    defs = cu.definitions
    for rc in cu.contracts.values():
        c = rc.definition
        for b in c.bases:
            if _base_name(b) not in defs:
                rc.unresolved_bases.append(b)
                d = Diagnostic(f"base {b} of {c.name} is not in the compilation unit", c.span,
                               "warning", "UnresolvedBase")
                rc.diagnostics.append(d)
                cu.diagnostics.append(d)
        lin_diags: list[Diagnostic] = []
        lin = linearize_inheritance(c, defs, lin_diags)
        rc.diagnostics.extend(lin_diags)
        cu.diagnostics.extend(lin_diags)
        rc.linearization = [cu.contracts[d.name] for d in lin]

    for rc in cu.contracts.values():
        for base in rc.linearization:
            if base.kind is not ContractKind.INTERFACE:
                rc.all_state_vars.extend(state_variable_ref(v) for v in base.definition.state_vars)
            for f in base.definition.functions:
                if f.kind is FunctionKind.CONSTRUCTOR and base is not rc:
                    continue
                key = signature_key(f)
                # an interface declaration never overrides an implementation
                if f.body is None and key in rc.all_functions and rc.all_functions[key].body is not None:
                    continue
                rc.all_functions.pop(key, None)
                rc.all_functions[key] = f
            for m in base.definition.modifiers:
                rc.modifiers[m.name] = m
    return cu


def analyze_sources(sources: Mapping[str, str], **kwargs) -> CompilationUnit:
    """Parse and resolve ``{file_id: text}``."""
    from .frontend import parse_source
    return resolve_compilation_unit([parse_source(text, fid, **kwargs) for fid, text in sources.items()])
