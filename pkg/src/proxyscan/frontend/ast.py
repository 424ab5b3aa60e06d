"""Immutable syntax tree for the supported Solidity subset.

Every node carries a :class:`Span`.  Spans are excluded from equality so two
trees parsed from differently formatted text compare equal when their
structure matches.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Iterator, Optional, Union


@dataclass(frozen=True)
class Span:
    file_id: str
    start: int
    end: int


NO_SPAN = Span("", 0, 0)


def _span() -> Span:
    return field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    span: Span = NO_SPAN
    severity: str = "warning"
    code: str = ""

    def __str__(self) -> str:
        return f"{self.span.file_id}:{self.span.start}: {self.severity}: {self.message}"


@dataclass(frozen=True, order=True)
class Version:
    major: int
    minor: int
    patch: int

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"


@dataclass(frozen=True)
class VersionRange:
    """Half-open ``[lower, upper)`` unless the inclusive flags say otherwise."""

    lower: Optional[Version]
    upper: Optional[Version]
    lower_inclusive: bool = True
    upper_inclusive: bool = False

    def contains(self, v: Version) -> bool:
        if self.lower is not None:
            if v < self.lower or (v == self.lower and not self.lower_inclusive):
                return False
        if self.upper is not None:
            if v > self.upper or (v == self.upper and not self.upper_inclusive):
                return False
        return True

    def __str__(self) -> str:
        lo = "(" if not self.lower_inclusive else "["
        hi = "]" if self.upper_inclusive else ")"
        return f"{lo}{self.lower or '*'}, {self.upper or '*'}{hi}"


# ---------------------------------------------------------------------------
# Type names


@dataclass(frozen=True)
class ElementaryTypeName:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class UserTypeName:
    path: str
    span: Span = _span()


@dataclass(frozen=True)
class MappingTypeName:
    key: "TypeName"
    value: "TypeName"
    span: Span = _span()


@dataclass(frozen=True)
class ArrayTypeName:
    base: "TypeName"
    length: Optional["Expr"] = None
    span: Span = _span()


@dataclass(frozen=True)
class FunctionTypeName:
    text: str
    span: Span = _span()


TypeName = Union[ElementaryTypeName, UserTypeName, MappingTypeName, ArrayTypeName, FunctionTypeName]


# ---------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True)
class Identifier:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class MemberAccess:
    expression: "Expr"
    member: str
    span: Span = _span()


@dataclass(frozen=True)
class MsgAccess:
    """``msg.sender``, ``msg.sig``, ``msg.data``, ``msg.value`` and ``msg.gas``."""

    field_name: str
    span: Span = _span()


@dataclass(frozen=True)
class IndexAccess:
    base: "Expr"
    index: Optional["Expr"] = None
    span: Span = _span()


@dataclass(frozen=True)
class IndexRange:
    base: "Expr"
    start: Optional["Expr"] = None
    end: Optional["Expr"] = None
    span: Span = _span()


@dataclass(frozen=True)
class CallOptions:
    """``expr{value: v, gas: g}``."""

    expression: "Expr"
    names: tuple[str, ...]
    values: tuple["Expr", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    callee: "Expr"
    args: tuple["Expr", ...] = ()
    arg_names: Optional[tuple[str, ...]] = None
    span: Span = _span()


@dataclass(frozen=True)
class Assignment:
    lhs: "Expr"
    op: str
    rhs: "Expr"
    span: Span = _span()


class LiteralKind(str, enum.Enum):
    NUMBER = "number"
    ADDRESS = "address"
    STRING = "string"
    HEX = "hex"
    BOOL = "bool"


@dataclass(frozen=True)
class Literal:
    kind: LiteralKind
    value: str
    subdenomination: Optional[str] = None
    span: Span = _span()


COMPARISON_OPS = frozenset({"==", "!=", "<", ">", "<=", ">="})


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: "Expr"
    right: "Expr"
    span: Span = _span()

    @property
    def is_comparison(self) -> bool:
        return self.op in COMPARISON_OPS


@dataclass(frozen=True)
class UnaryOp:
    op: str
    operand: "Expr"
    prefix: bool = True
    span: Span = _span()


@dataclass(frozen=True)
class Conditional:
    condition: "Expr"
    if_true: "Expr"
    if_false: "Expr"
    span: Span = _span()


@dataclass(frozen=True)
class TupleExpr:
    elements: tuple[Optional["Expr"], ...]
    is_array: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class NewExpr:
    type_name: TypeName
    span: Span = _span()


@dataclass(frozen=True)
class TypeExpr:
    """A type used in expression position, e.g. ``uint256[]`` in ``abi.decode``."""

    type_name: TypeName
    span: Span = _span()


Expr = Union[
    Identifier, MemberAccess, MsgAccess, IndexAccess, IndexRange, CallOptions, Call,
    Assignment, Literal, BinaryOp, UnaryOp, Conditional, TupleExpr, NewExpr, TypeExpr,
]


# ---------------------------------------------------------------------------
# Yul


@dataclass(frozen=True)
class YulIdentifier:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class YulLiteral:
    kind: str  # number | hex | string | bool
    value: str
    span: Span = _span()


@dataclass(frozen=True)
class YulCall:
    name: str
    args: tuple["YulExpr", ...] = ()
    span: Span = _span()


YulExpr = Union[YulIdentifier, YulLiteral, YulCall]


@dataclass(frozen=True)
class YulLet:
    names: tuple[str, ...]
    value: Optional[YulExpr] = None
    span: Span = _span()


@dataclass(frozen=True)
class YulAssign:
    names: tuple[str, ...]
    value: YulExpr
    span: Span = _span()


@dataclass(frozen=True)
class YulExprStmt:
    expression: YulExpr
    span: Span = _span()


@dataclass(frozen=True)
class YulIf:
    condition: YulExpr
    body: "YulBody"
    span: Span = _span()


@dataclass(frozen=True)
class YulCase:
    value: Optional[YulLiteral]  # None for ``default``
    body: "YulBody"
    span: Span = _span()


@dataclass(frozen=True)
class YulSwitch:
    expression: YulExpr
    cases: tuple[YulCase, ...]
    span: Span = _span()


@dataclass(frozen=True)
class YulBody:
    statements: tuple["YulStmt", ...]
    span: Span = _span()


YulStmt = Union[YulLet, YulAssign, YulExprStmt, YulIf, YulSwitch, YulBody]


@dataclass(frozen=True)
class YulBlock:
    """An inline assembly block.

    Exactly one of ``raw_text`` and ``yul_ast`` is set.  Which one depends on
    the compiler version the source targets.
    """

    raw_text: Optional[str] = None
    yul_ast: Optional[YulBody] = None
    dialect: Optional[str] = None
    flags: tuple[str, ...] = ()
    span: Span = _span()
    parent_function: Optional["FunctionDef"] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if (self.raw_text is None) == (self.yul_ast is None):
            raise ValueError("YulBlock needs exactly one of raw_text / yul_ast")

    @property
    def is_raw(self) -> bool:
        return self.raw_text is not None


# ---------------------------------------------------------------------------
# Statements


@dataclass(frozen=True)
class Param:
    type_name: TypeName
    name: Optional[str] = None
    storage_location: Optional[str] = None
    indexed: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class Block:
    statements: tuple["Stmt", ...]
    unchecked: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class ExpressionStmt:
    expression: Expr
    span: Span = _span()


@dataclass(frozen=True)
class VarDeclStmt:
    """``T x = e;`` or ``(T a, , U b) = e;``.  ``var`` declarations have no type."""

    declarations: tuple[Optional[Param], ...]
    initializer: Optional[Expr] = None
    is_tuple: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class IfStmt:
    condition: Expr
    then_branch: "Stmt"
    else_branch: Optional["Stmt"] = None
    span: Span = _span()


@dataclass(frozen=True)
class ReturnStmt:
    value: Optional[Expr] = None
    span: Span = _span()


@dataclass(frozen=True)
class RequireStmt:
    condition: Expr
    message: Optional[Expr] = None
    callee: str = "require"
    span: Span = _span()


@dataclass(frozen=True)
class EmitStmt:
    event: Expr
    span: Span = _span()


@dataclass(frozen=True)
class AssemblyStmt:
    block: YulBlock
    span: Span = _span()


@dataclass(frozen=True)
class ForStmt:
    init: Optional["Stmt"]
    condition: Optional[Expr]
    post: Optional[Expr]
    body: "Stmt"
    span: Span = _span()


@dataclass(frozen=True)
class WhileStmt:
    condition: Expr
    body: "Stmt"
    do_while: bool = False
    span: Span = _span()


@dataclass(frozen=True)
class SimpleStmt:
    """``_;``, ``break;``, ``continue;``, ``throw;``."""

    keyword: str
    span: Span = _span()


@dataclass(frozen=True)
class RevertStmt:
    error: Optional[Expr] = None
    span: Span = _span()


Stmt = Union[
    Block, ExpressionStmt, VarDeclStmt, IfStmt, ReturnStmt, RequireStmt, EmitStmt,
    AssemblyStmt, ForStmt, WhileStmt, SimpleStmt, RevertStmt,
]


# ---------------------------------------------------------------------------
# Declarations


class FunctionKind(str, enum.Enum):
    FUNCTION = "function"
    CONSTRUCTOR = "constructor"
    FALLBACK = "fallback"
    RECEIVE = "receive"
    MODIFIER = "modifier"


@dataclass(frozen=True)
class ModifierInvocation:
    name: str
    args: Optional[tuple[Expr, ...]] = None
    span: Span = _span()


@dataclass(frozen=True)
class FunctionDef:
    name: str
    kind: FunctionKind = FunctionKind.FUNCTION
    params: tuple[Param, ...] = ()
    returns: tuple[Param, ...] = ()
    visibility: str = "public"
    mutability: str = "nonpayable"
    modifiers: tuple[ModifierInvocation, ...] = ()
    body: Optional[Block] = None
    declaring_contract: str = ""
    is_virtual: bool = False
    is_override: bool = False
    legacy_fallback: bool = False
    span: Span = _span()

    @property
    def is_fallback(self) -> bool:
        return self.kind is FunctionKind.FALLBACK

    @property
    def is_receive(self) -> bool:
        return self.kind is FunctionKind.RECEIVE

    @property
    def is_constructor(self) -> bool:
        return self.kind is FunctionKind.CONSTRUCTOR

    @property
    def is_modifier(self) -> bool:
        return self.kind is FunctionKind.MODIFIER

    @property
    def is_entry_point(self) -> bool:
        return self.visibility in ("public", "external")

    @property
    def full_name(self) -> str:
        return f"{self.declaring_contract}.{self.name or '<' + self.kind.value + '>'}"

    def __str__(self) -> str:
        return self.full_name


@dataclass(frozen=True)
class StateVarDecl:
    name: str
    type_name: TypeName
    visibility: str = "internal"
    mutability: str = "mutable"  # mutable | constant | immutable
    initializer: Optional[Expr] = None
    declaring_contract: str = ""
    span: Span = _span()

    @property
    def is_constant(self) -> bool:
        return self.mutability in ("constant", "immutable")


@dataclass(frozen=True)
class StructDef:
    name: str
    members: tuple[Param, ...]
    span: Span = _span()


@dataclass(frozen=True)
class EnumDef:
    name: str
    members: tuple[str, ...]
    span: Span = _span()


@dataclass(frozen=True)
class EventDef:
    name: str
    span: Span = _span()


class ContractKind(str, enum.Enum):
    CONTRACT = "contract"
    INTERFACE = "interface"
    LIBRARY = "library"
    ABSTRACT = "abstract"


@dataclass(frozen=True)
class ContractDef:
    name: str
    kind: ContractKind = ContractKind.CONTRACT
    bases: tuple[str, ...] = ()
    state_vars: tuple[StateVarDecl, ...] = ()
    functions: tuple[FunctionDef, ...] = ()
    modifiers: tuple[FunctionDef, ...] = ()
    structs: tuple[StructDef, ...] = ()
    enums: tuple[EnumDef, ...] = ()
    events: tuple[EventDef, ...] = ()
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)
    span: Span = _span()

    @property
    def fallback(self) -> Optional[FunctionDef]:
        return next((f for f in self.functions if f.is_fallback), None)

    @property
    def receive(self) -> Optional[FunctionDef]:
        return next((f for f in self.functions if f.is_receive), None)


@dataclass(frozen=True)
class SourceUnit:
    file_id: str
    pragma_version: Optional[VersionRange]
    contracts: tuple[ContractDef, ...] = ()
    imports: tuple[str, ...] = ()
    structs: tuple[StructDef, ...] = ()
    enums: tuple[EnumDef, ...] = ()
    pragma_text: Optional[str] = None
    uses_yul_ast: bool = False
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)
    source_length: int = field(default=0, compare=False)

    def contract(self, name: str) -> Optional[ContractDef]:
        return next((c for c in self.contracts if c.name == name), None)


# ---------------------------------------------------------------------------
# Generic traversal


def iter_children(node: object) -> Iterator[object]:
    """Yield the direct syntax-node children of ``node``."""
    if not is_dataclass(node):
        return
    for f in fields(node):
        if f.name in ("span", "parent_function", "diagnostics"):
            continue
        value = getattr(node, f.name)
        if isinstance(value, tuple):
            for item in value:
                if is_dataclass(item):
                    yield item
        elif is_dataclass(value) and not isinstance(value, (Span, Version, VersionRange)):
            yield value


def walk(node: object) -> Iterator[object]:
    """Depth-first pre-order traversal over ``node`` and its descendants."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        children = list(iter_children(current))
        stack.extend(reversed(children))
