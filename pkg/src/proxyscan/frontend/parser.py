"""Recursive-descent parser for the supported Solidity subset.

Constructs outside the subset are skipped with a diagnostic attached to the
enclosing contract (or unit); only file-level structural failures raise
:class:`ParseError`.
"""

from __future__ import annotations

import logging
import re
from typing import Callable, Optional

from . import pragma as pragma_mod
from .ast import (
    ArrayTypeName, Assignment, AssemblyStmt, BinaryOp, Block, Call, CallOptions, Conditional,
    ContractDef, ContractKind, Diagnostic, ElementaryTypeName, EmitStmt, EnumDef, EventDef, Expr,
    ExpressionStmt, ForStmt, FunctionDef, FunctionKind, FunctionTypeName, Identifier, IfStmt,
    IndexAccess, IndexRange, Literal, LiteralKind, MappingTypeName, MemberAccess,
    ModifierInvocation, MsgAccess, NewExpr, Param, RequireStmt, ReturnStmt, RevertStmt,
    SimpleStmt, SourceUnit, Span, StateVarDecl, Stmt, StructDef, TupleExpr, TypeExpr,
    TypeName, UnaryOp, UserTypeName, Version, VarDeclStmt, WhileStmt, YulBlock, walk,
)
from .lexer import EOF, HEXSTR, IDENT, NUMBER, PUNCT, STRING, ParseError, Token, tokenize, unquote
from .yul import parse_yul_tokens

logger = logging.getLogger(__name__)

DEFAULT_MAX_SOURCE_BYTES = 2 * 1024 * 1024

_ELEMENTARY_RE = re.compile(
    r"^(address|bool|string|bytes|byte|var|"
    r"u?int(8|16|24|32|40|48|56|64|72|80|88|96|104|112|120|128|136|144|152|160|168|176|184|192|200|208|216|224|232|240|248|256)?|"
    r"bytes([1-9]|[12][0-9]|3[0-2])|u?fixed([0-9]+x[0-9]+)?)$"
)
_VISIBILITY = {"public", "private", "internal", "external"}
_MUTABILITY = {"pure", "view", "payable", "constant", "nonpayable"}
_LOCATIONS = {"memory", "storage", "calldata"}
_MSG_FIELDS = {"sender", "sig", "data", "value", "gas"}
_SUBDENOMINATIONS = {"wei", "gwei", "szabo", "finney", "ether", "seconds", "minutes", "hours", "days", "weeks", "years"}
_ASSIGN_OPS = {"=", "|=", "^=", "&=", "<<=", ">>=", "+=", "-=", "*=", "/=", "%="}
_BINARY_PRECEDENCE = [
    {"||"},
    {"&&"},
    {"==", "!="},
    {"<", ">", "<=", ">="},
    {"|"},
    {"^"},
    {"&"},
    {"<<", ">>", ">>>"},
    {"+", "-"},
    {"*", "/", "%"},
]
_RESERVED_STMT_START = {
    "if", "for", "while", "do", "return", "emit", "assembly", "break", "continue", "throw",
    "try", "unchecked",
}


def is_elementary_type(name: str) -> bool:
    return bool(_ELEMENTARY_RE.match(name))


class _Unsupported(ParseError):
    """A construct that is valid Solidity but outside the supported subset."""


class Parser:
    def __init__(self, source: str, file_id: str, yul_ast: bool):
        self.source = source
        self.file_id = file_id
        self.tokens = tokenize(source, file_id)
        self.pos = 0
        self.yul_ast = yul_ast
        self.unit_diagnostics: list[Diagnostic] = []
        self._contract_diags: Optional[list[Diagnostic]] = None
        self._contract_name = ""

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.is_(text)

    def accept(self, text: str) -> bool:
        if self.tok.is_(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.tok
        if not tok.is_(text):
            raise ParseError(f"expected {text!r}, got {tok.text or 'end of file'!r}", self._tok_span(tok))
        self.pos += 1
        return tok

    def ident(self) -> str:
        tok = self.tok
        if tok.kind != IDENT:
            raise ParseError(f"expected identifier, got {tok.text or 'end of file'!r}", self._tok_span(tok))
        self.pos += 1
        return tok.text

    def _tok_span(self, tok: Token) -> Span:
        return Span(self.file_id, tok.start, tok.end)

    def span_from(self, start: Token) -> Span:
        prev = self.tokens[self.pos - 1] if self.pos > 0 else start
        return Span(self.file_id, start.start, max(prev.end, start.end if prev is start else prev.end))

    def diag(self, message: str, span: Span) -> None:
        d = Diagnostic(message, span)
        if self._contract_diags is not None:
            self._contract_diags.append(d)
        else:
            self.unit_diagnostics.append(d)

    def _matching(self, index: int) -> int:
        """Index of the bracket closing the one at ``index``."""
        pairs = {"(": ")", "[": "]", "{": "}"}
        depth = 0
        for i in range(index, len(self.tokens)):
            t = self.tokens[i]
            if t.kind != PUNCT:
                continue
            if t.text in pairs:
                depth += 1
            elif t.text in (")", "]", "}"):
                depth -= 1
                if depth == 0:
                    return i
        raise ParseError("unbalanced brackets", self._tok_span(self.tokens[index]))

    def skip_balanced(self) -> None:
        self.pos = self._matching(self.pos) + 1

    def skip_construct(self, stop_before_close: bool = True) -> None:
        """Skip one member/statement: through ``;`` at depth 0 or a closing ``}``."""
        depth = 0
        while self.tok.kind != EOF:
            t = self.tok
            if t.kind == PUNCT and t.text in ("(", "[", "{"):
                depth += 1
            elif t.kind == PUNCT and t.text in (")", "]", "}"):
                if depth == 0 and stop_before_close:
                    return
                depth -= 1
                if depth == 0 and t.text == "}":
                    self.pos += 1
                    if self.tok.is_("else") or self.tok.is_("catch"):
                        continue
                    return
            elif t.is_(";") and depth == 0:
                self.pos += 1
                return
            self.pos += 1

    # -- unit --------------------------------------------------------------

    def check_balance(self) -> None:
        stack: list[Token] = []
        closers = {")": "(", "]": "[", "}": "{"}
        for t in self.tokens:
            if t.kind != PUNCT:
                continue
            if t.text in ("(", "[", "{"):
                stack.append(t)
            elif t.text in closers:
                if not stack or stack[-1].text != closers[t.text]:
                    raise ParseError(f"unbalanced {t.text!r}", self._tok_span(t))
                stack.pop()
        if stack:
            raise ParseError(f"unclosed {stack[-1].text!r}", self._tok_span(stack[-1]))

    def parse_unit(self) -> tuple[list[ContractDef], list[str], list[StructDef], list[EnumDef]]:
        self.check_balance()
        contracts: list[ContractDef] = []
        imports: list[str] = []
        structs: list[StructDef] = []
        enums: list[EnumDef] = []
        while self.tok.kind != EOF:
            tok = self.tok
            if tok.is_("pragma"):
                while not self.at(";") and self.tok.kind != EOF:
                    self.pos += 1
                self.expect(";")
            elif tok.is_("import"):
                imports.append(self.parse_import())
            elif tok.is_("contract") or tok.is_("interface") or tok.is_("library") or (
                tok.is_("abstract") and self.peek().is_("contract")
            ):
                contracts.append(self.parse_contract())
            elif tok.is_("struct"):
                structs.append(self.parse_struct())
            elif tok.is_("enum"):
                enums.append(self.parse_enum())
            elif tok.kind == IDENT:
                start = self.tok
                self.skip_construct(stop_before_close=False)
                self.diag(f"skipped unsupported file-level construct starting with {start.text!r}",
                          self.span_from(start))
            elif tok.is_(";"):
                self.pos += 1
            else:
                raise ParseError(f"unexpected {tok.text!r} at file level", self._tok_span(tok))
        return contracts, imports, structs, enums

    def parse_import(self) -> str:
        start = self.expect("import")
        path = None
        while not self.at(";"):
            if self.tok.kind == EOF:
                raise ParseError("unterminated import", self.span_from(start))
            if self.tok.kind == STRING and path is None:
                path = unquote(self.tok.text)
            self.pos += 1
        self.expect(";")
        if path is None:
            raise ParseError("import without a path", self.span_from(start))
        return path

    # -- contracts -----------------------------------------------------------

    def parse_contract(self) -> ContractDef:
        start = self.tok
        if self.accept("abstract"):
            kind = ContractKind.ABSTRACT
            self.expect("contract")
        else:
            kind = ContractKind(self.ident())
        name = self.ident()
        bases: list[str] = []
        if self.accept("is"):
            while True:
                bases.append(self.dotted_name())
                if self.at("("):
                    self.skip_balanced()
                if not self.accept(","):
                    break
        self.expect("{")
        self._contract_diags = []
        self._contract_name = name
        state_vars: list[StateVarDecl] = []
        functions: list[FunctionDef] = []
        modifiers: list[FunctionDef] = []
        structs: list[StructDef] = []
        enums: list[EnumDef] = []
        events: list[EventDef] = []
        while not self.at("}"):
            member_start = self.pos
            tok = self.tok
            try:
                if tok.is_("function") or tok.is_("constructor") or tok.is_("fallback") or tok.is_("receive"):
                    if tok.text in ("fallback", "receive") and not self.peek().is_("("):
                        state_vars.append(self.parse_state_var())
                    else:
                        functions.append(self.parse_function(name))
                elif tok.is_("modifier"):
                    modifiers.append(self.parse_modifier(name))
                elif tok.is_("struct"):
                    structs.append(self.parse_struct())
                elif tok.is_("enum"):
                    enums.append(self.parse_enum())
                elif tok.is_("event"):
                    self.pos += 1
                    ev_name = self.ident()
                    self.skip_construct()
                    events.append(EventDef(ev_name, self.span_from(tok)))
                elif tok.is_("using") or tok.is_("error") or tok.is_("type"):
                    self.skip_construct()
                    self.diag(f"skipped unsupported member {tok.text!r}", self.span_from(tok))
                elif tok.is_(";"):
                    self.pos += 1
                else:
                    state_vars.append(self.parse_state_var())
            except ParseError as exc:
                self.pos = member_start
                self.skip_construct()
                if self.pos == member_start:
                    raise
                self.diag(f"skipped member: {exc.message}", self.span_from(tok))
        self.expect("}")
        diags = tuple(self._contract_diags)
        self._contract_diags = None
        functions = [self._legacy_constructor(f, name) for f in functions]
        return ContractDef(
            name=name, kind=kind, bases=tuple(bases), state_vars=tuple(state_vars),
            functions=tuple(functions), modifiers=tuple(modifiers), structs=tuple(structs),
            enums=tuple(enums), events=tuple(events), diagnostics=diags, span=self.span_from(start),
        )

    @staticmethod
    def _legacy_constructor(fn: FunctionDef, contract_name: str) -> FunctionDef:
        if fn.kind is FunctionKind.FUNCTION and fn.name == contract_name:
            return FunctionDef(
                name=fn.name, kind=FunctionKind.CONSTRUCTOR, params=fn.params, returns=fn.returns,
                visibility=fn.visibility, mutability=fn.mutability, modifiers=fn.modifiers,
                body=fn.body, declaring_contract=fn.declaring_contract, span=fn.span,
            )
        return fn

    def dotted_name(self) -> str:
        name = self.ident()
        while self.at(".") and self.peek().kind == IDENT:
            self.pos += 1
            name += "." + self.ident()
        return name

    def parse_struct(self) -> StructDef:
        start = self.expect("struct")
        name = self.ident()
        self.expect("{")
        members: list[Param] = []
        while not self.at("}"):
            m_start = self.tok
            t = self.parse_type()
            m_name = self.ident()
            self.expect(";")
            members.append(Param(t, m_name, span=self.span_from(m_start)))
        self.expect("}")
        return StructDef(name, tuple(members), self.span_from(start))

    def parse_enum(self) -> EnumDef:
        start = self.expect("enum")
        name = self.ident()
        self.expect("{")
        members: list[str] = []
        while not self.at("}"):
            members.append(self.ident())
            if not self.accept(","):
                break
        self.expect("}")
        return EnumDef(name, tuple(members), self.span_from(start))

    def parse_state_var(self) -> StateVarDecl:
        start = self.tok
        type_name = self.parse_type()
        visibility = "internal"
        mutability = "mutable"
        while True:
            t = self.tok
            if t.kind == IDENT and t.text in _VISIBILITY:
                visibility = t.text
                self.pos += 1
            elif t.is_("constant") or t.is_("immutable"):
                mutability = t.text
                self.pos += 1
            elif t.is_("override"):
                self.pos += 1
                if self.at("("):
                    self.skip_balanced()
            elif t.is_("transient"):
                self.pos += 1
                self.diag("transient storage variable treated as regular storage", self._tok_span(t))
            else:
                break
        name = self.ident()
        initializer = None
        if self.accept("="):
            initializer = self.parse_expression()
        self.expect(";")
        if mutability == "constant" and initializer is None:
            raise ParseError(f"constant {name!r} without initializer", self.span_from(start))
        return StateVarDecl(name, type_name, visibility, mutability, initializer, self._contract_name,
                            self.span_from(start))

    def parse_function(self, contract_name: str) -> FunctionDef:
        start = self.tok
        legacy = False
        if self.accept("function"):
            if self.at("("):
                kind, name, legacy = FunctionKind.FALLBACK, "", True
            else:
                name = self.ident()
                kind = FunctionKind.FUNCTION
        else:
            word = self.ident()
            kind = FunctionKind(word)
            name = "" if kind is FunctionKind.CONSTRUCTOR else word
        params = self.parse_param_list()
        visibility = "external" if kind in (FunctionKind.FALLBACK, FunctionKind.RECEIVE) else "public"
        mutability = "payable" if kind is FunctionKind.RECEIVE else "nonpayable"
        modifiers: list[ModifierInvocation] = []
        is_virtual = is_override = False
        returns: tuple[Param, ...] = ()
        while True:
            t = self.tok
            if t.kind == IDENT and t.text in _VISIBILITY:
                visibility = t.text
                self.pos += 1
            elif t.kind == IDENT and t.text in _MUTABILITY:
                mutability = "view" if t.text == "constant" else t.text
                self.pos += 1
            elif t.is_("virtual"):
                is_virtual = True
                self.pos += 1
            elif t.is_("override"):
                is_override = True
                self.pos += 1
                if self.at("("):
                    self.skip_balanced()
            elif t.is_("returns"):
                self.pos += 1
                returns = self.parse_param_list()
            elif t.kind == IDENT:
                m_start = self.tok
                m_name = self.dotted_name()
                args = None
                if self.at("("):
                    args = tuple(self.parse_call_args()[0])
                modifiers.append(ModifierInvocation(m_name, args, self.span_from(m_start)))
            else:
                break
        body = None
        if not self.accept(";"):
            body = self.parse_block()
        fn = FunctionDef(
            name=name, kind=kind, params=params, returns=returns, visibility=visibility,
            mutability=mutability, modifiers=tuple(modifiers), body=body,
            declaring_contract=contract_name, is_virtual=is_virtual, is_override=is_override,
            legacy_fallback=legacy, span=self.span_from(start),
        )
        _attach_parent(fn)
        return fn

    def parse_modifier(self, contract_name: str) -> FunctionDef:
        start = self.expect("modifier")
        name = self.ident()
        params: tuple[Param, ...] = ()
        if self.at("("):
            params = self.parse_param_list()
        is_virtual = is_override = False
        while True:
            if self.accept("virtual"):
                is_virtual = True
            elif self.accept("override"):
                is_override = True
                if self.at("("):
                    self.skip_balanced()
            else:
                break
        body = None
        if not self.accept(";"):
            body = self.parse_block()
        fn = FunctionDef(
            name=name, kind=FunctionKind.MODIFIER, params=params, visibility="internal",
            body=body, declaring_contract=contract_name, is_virtual=is_virtual,
            is_override=is_override, span=self.span_from(start),
        )
        _attach_parent(fn)
        return fn

    def parse_param_list(self) -> tuple[Param, ...]:
        self.expect("(")
        params: list[Param] = []
        while not self.at(")"):
            p_start = self.tok
            t = self.parse_type()
            location = None
            indexed = False
            name = None
            while True:
                if self.tok.kind == IDENT and self.tok.text in _LOCATIONS:
                    location = self.tok.text
                    self.pos += 1
                elif self.accept("indexed"):
                    indexed = True
                else:
                    break
            if self.tok.kind == IDENT:
                name = self.ident()
            params.append(Param(t, name, location, indexed, self.span_from(p_start)))
            if not self.accept(","):
                break
        self.expect(")")
        return tuple(params)

    # -- types -------------------------------------------------------------

    def parse_type(self) -> TypeName:
        start = self.tok
        if self.accept("mapping"):
            self.expect("(")
            key = self.parse_type()
            if self.tok.kind == IDENT:
                self.pos += 1
            self.expect("=>")
            value = self.parse_type()
            if self.tok.kind == IDENT:
                self.pos += 1
            self.expect(")")
            base: TypeName = MappingTypeName(key, value, self.span_from(start))
        elif self.at("function"):
            self.pos += 1
            self.skip_balanced()
            while self.tok.kind == IDENT and (self.tok.text in _VISIBILITY or self.tok.text in _MUTABILITY):
                self.pos += 1
            if self.accept("returns"):
                self.skip_balanced()
            base = FunctionTypeName(self.source[start.start:self.tokens[self.pos - 1].end], self.span_from(start))
        elif self.tok.kind == IDENT and is_elementary_type(self.tok.text):
            name = self.tok.text
            self.pos += 1
            if name == "address" and self.at("payable"):
                self.pos += 1
                name = "address payable"
            base = ElementaryTypeName(name, self.span_from(start))
        elif self.tok.kind == IDENT and self.tok.text not in _RESERVED_STMT_START:
            base = UserTypeName(self.dotted_name(), self.span_from(start))
        else:
            raise ParseError(f"expected type name, got {self.tok.text!r}", self._tok_span(self.tok))
        while self.at("["):
            self.pos += 1
            length = None
            if not self.at("]"):
                length = self.parse_expression()
            self.expect("]")
            base = ArrayTypeName(base, length, self.span_from(start))
        return base

    # -- statements ----------------------------------------------------------

    def parse_block(self) -> Block:
        start = self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.tok.kind == EOF:
                raise ParseError("unterminated block", self.span_from(start))
            stmt_start = self.pos
            try:
                stmts.append(self.parse_statement())
            except ParseError as exc:
                first = self.tokens[stmt_start]
                self.pos = stmt_start
                self.skip_construct()
                if self.pos == stmt_start:
                    raise
                self.diag(f"skipped statement: {exc.message}", self.span_from(first))
        self.expect("}")
        return Block(tuple(stmts), False, self.span_from(start))

    def parse_statement(self) -> Stmt:
        tok = self.tok
        if tok.is_("{"):
            return self.parse_block()
        if tok.is_("unchecked") and self.peek().is_("{"):
            self.pos += 1
            inner = self.parse_block()
            return Block(inner.statements, True, self.span_from(tok))
        if tok.is_("if"):
            self.pos += 1
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            then_branch = self.parse_statement()
            else_branch = None
            if self.accept("else"):
                else_branch = self.parse_statement()
            return IfStmt(cond, then_branch, else_branch, self.span_from(tok))
        if tok.is_("for"):
            self.pos += 1
            self.expect("(")
            init = None
            if not self.accept(";"):
                init = self.parse_simple_statement()
            cond = None
            if not self.at(";"):
                cond = self.parse_expression()
            self.expect(";")
            post = None
            if not self.at(")"):
                post = self.parse_expression()
            self.expect(")")
            body = self.parse_statement()
            return ForStmt(init, cond, post, body, self.span_from(tok))
        if tok.is_("while"):
            self.pos += 1
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            body = self.parse_statement()
            return WhileStmt(cond, body, False, self.span_from(tok))
        if tok.is_("do"):
            self.pos += 1
            body = self.parse_statement()
            self.expect("while")
            self.expect("(")
            cond = self.parse_expression()
            self.expect(")")
            self.expect(";")
            return WhileStmt(cond, body, True, self.span_from(tok))
        if tok.is_("return"):
            self.pos += 1
            value = None
            if not self.at(";"):
                value = self.parse_expression()
            self.expect(";")
            return ReturnStmt(value, self.span_from(tok))
        if tok.is_("emit"):
            self.pos += 1
            event = self.parse_expression()
            self.expect(";")
            return EmitStmt(event, self.span_from(tok))
        if tok.is_("assembly"):
            return self.parse_assembly()
        if tok.kind == IDENT and tok.text in ("break", "continue", "throw") and self.peek().is_(";"):
            self.pos += 2
            return SimpleStmt(tok.text, self.span_from(tok))
        if tok.is_("_") and self.peek().is_(";"):
            self.pos += 2
            return SimpleStmt("_", self.span_from(tok))
        if tok.is_("revert") and self.peek().kind == IDENT:
            self.pos += 1
            err = self.parse_expression()
            self.expect(";")
            return RevertStmt(err, self.span_from(tok))
        if tok.is_("try"):
            raise _Unsupported("try/catch is not supported", self._tok_span(tok))
        stmt = self.parse_simple_statement()
        return stmt

    def parse_simple_statement(self) -> Stmt:
        """Variable declaration or expression statement, including the ``;``."""
        tok = self.tok
        decl = self._try(self._parse_var_decl)
        if decl is not None:
            return decl
        expr = self.parse_expression()
        self.expect(";")
        span = self.span_from(tok)
        if isinstance(expr, Call) and isinstance(expr.callee, Identifier):
            if expr.callee.name == "require" and expr.args:
                msg = expr.args[1] if len(expr.args) > 1 else None
                return RequireStmt(expr.args[0], msg, "require", span)
            if expr.callee.name == "revert":
                return RevertStmt(expr, span)
        return ExpressionStmt(expr, span)

    def _try(self, fn: Callable[[], Optional[Stmt]]) -> Optional[Stmt]:
        save = self.pos
        saved_diags = len(self._contract_diags) if self._contract_diags is not None else None
        try:
            result = fn()
        except ParseError:
            result = None
        if result is None:
            self.pos = save
            if saved_diags is not None and self._contract_diags is not None:
                del self._contract_diags[saved_diags:]
        return result

    def _parse_var_decl(self) -> Optional[Stmt]:
        start = self.tok
        if self.accept("var"):
            if self.at("("):
                self.pos += 1
                names: list[Optional[Param]] = []
                while not self.at(")"):
                    if self.at(","):
                        names.append(None)
                    else:
                        p_tok = self.tok
                        names.append(Param(ElementaryTypeName("var", self._tok_span(p_tok)), self.ident(),
                                           span=self.span_from(p_tok)))
                    if not self.accept(","):
                        break
                    if self.at(")"):
                        names.append(None)
                self.expect(")")
                self.expect("=")
                init = self.parse_expression()
                self.expect(";")
                return VarDeclStmt(tuple(names), init, True, self.span_from(start))
            p_tok = self.tok
            name = self.ident()
            p = Param(ElementaryTypeName("var", self._tok_span(start)), name, span=self.span_from(p_tok))
            init = None
            if self.accept("="):
                init = self.parse_expression()
            self.expect(";")
            return VarDeclStmt((p,), init, False, self.span_from(start))
        if self.at("("):
            self.pos += 1
            decls: list[Optional[Param]] = []
            while not self.at(")"):
                if self.at(","):
                    decls.append(None)
                    self.pos += 1
                    continue
                p = self._declaration()
                if p is None:
                    return None
                decls.append(p)
                if not self.accept(","):
                    break
                if self.at(")"):
                    decls.append(None)
            self.expect(")")
            if not any(d is not None for d in decls):
                return None
            self.expect("=")
            init = self.parse_expression()
            self.expect(";")
            return VarDeclStmt(tuple(decls), init, True, self.span_from(start))
        p = self._declaration()
        if p is None:
            return None
        init = None
        if self.accept("="):
            init = self.parse_expression()
        self.expect(";")
        return VarDeclStmt((p,), init, False, self.span_from(start))

    def _declaration(self) -> Optional[Param]:
        start = self.tok
        if start.kind != IDENT or start.text in _RESERVED_STMT_START or start.text in ("new", "delete", "msg"):
            return None
        t = self.parse_type()
        location = None
        if self.tok.kind == IDENT and self.tok.text in _LOCATIONS:
            location = self.tok.text
            self.pos += 1
        if self.tok.kind != IDENT:
            return None
        name = self.ident()
        if not (self.at("=") or self.at(";") or self.at(",") or self.at(")")):
            return None
        return Param(t, name, location, span=self.span_from(start))

    def parse_assembly(self) -> AssemblyStmt:
        start = self.expect("assembly")
        dialect = None
        flags: list[str] = []
        if self.tok.kind == STRING:
            dialect = unquote(self.tok.text)
            self.pos += 1
        if self.at("("):
            self.pos += 1
            while not self.at(")"):
                if self.tok.kind == STRING:
                    flags.append(unquote(self.tok.text))
                self.pos += 1
            self.expect(")")
        if not self.at("{"):
            raise ParseError("expected '{' after assembly", self._tok_span(self.tok))
        open_idx = self.pos
        close_idx = self._matching(open_idx)
        open_tok, close_tok = self.tokens[open_idx], self.tokens[close_idx]
        raw = self.source[open_tok.end:close_tok.start]
        self.pos = close_idx + 1
        span = self.span_from(start)
        block_span = Span(self.file_id, open_tok.start, close_tok.end)
        if self.yul_ast:
            try:
                body = parse_yul_tokens(self.tokens[open_idx:close_idx + 1], self.file_id)
                block = YulBlock(yul_ast=body, dialect=dialect, flags=tuple(flags), span=block_span)
            except ParseError as exc:
                self.diag(f"assembly kept as text: {exc.message}", block_span)
                block = YulBlock(raw_text=raw, dialect=dialect, flags=tuple(flags), span=block_span)
        else:
            block = YulBlock(raw_text=raw, dialect=dialect, flags=tuple(flags), span=block_span)
        return AssemblyStmt(block, span)

    # -- expressions ---------------------------------------------------------

    def parse_expression(self) -> Expr:
        start = self.tok
        lhs = self.parse_conditional()
        if self.tok.kind == PUNCT and self.tok.text in _ASSIGN_OPS:
            op = self.tok.text
            self.pos += 1
            rhs = self.parse_expression()
            return Assignment(lhs, op, rhs, self.span_from(start))
        return lhs

    def parse_conditional(self) -> Expr:
        start = self.tok
        cond = self.parse_binary(0)
        if self.accept("?"):
            a = self.parse_expression()
            self.expect(":")
            b = self.parse_expression()
            return Conditional(cond, a, b, self.span_from(start))
        return cond

    def parse_binary(self, level: int) -> Expr:
        if level == len(_BINARY_PRECEDENCE):
            return self.parse_power()
        start = self.tok
        left = self.parse_binary(level + 1)
        ops = _BINARY_PRECEDENCE[level]
        while self.tok.kind == PUNCT and self.tok.text in ops:
            op = self.tok.text
            self.pos += 1
            right = self.parse_binary(level + 1)
            left = BinaryOp(op, left, right, self.span_from(start))
        return left

    def parse_power(self) -> Expr:
        start = self.tok
        base = self.parse_unary()
        if self.accept("**"):
            exponent = self.parse_power()
            return BinaryOp("**", base, exponent, self.span_from(start))
        return base

    def parse_unary(self) -> Expr:
        start = self.tok
        if self.tok.kind == PUNCT and self.tok.text in ("!", "~", "-", "++", "--", "+"):
            op = self.tok.text
            self.pos += 1
            operand = self.parse_unary()
            return UnaryOp(op, operand, True, self.span_from(start))
        if self.at("delete"):
            self.pos += 1
            operand = self.parse_unary()
            return UnaryOp("delete", operand, True, self.span_from(start))
        expr = self.parse_postfix()
        while self.tok.kind == PUNCT and self.tok.text in ("++", "--"):
            op = self.tok.text
            self.pos += 1
            expr = UnaryOp(op, expr, False, self.span_from(start))
        return expr

    def parse_postfix(self) -> Expr:
        start = self.tok
        expr = self.parse_primary()
        while True:
            if self.at("."):
                self.pos += 1
                member = self.ident()
                expr = MemberAccess(expr, member, self.span_from(start))
            elif self.at("["):
                self.pos += 1
                if self.accept("]"):
                    expr = IndexAccess(expr, None, self.span_from(start))
                    continue
                lo = None
                if not self.at(":"):
                    lo = self.parse_expression()
                if self.accept(":"):
                    hi = None
                    if not self.at("]"):
                        hi = self.parse_expression()
                    self.expect("]")
                    expr = IndexRange(expr, lo, hi, self.span_from(start))
                else:
                    self.expect("]")
                    expr = IndexAccess(expr, lo, self.span_from(start))
            elif self.at("("):
                args, names = self.parse_call_args()
                expr = Call(expr, tuple(args), names, self.span_from(start))
            elif self.at("{") and self.peek().kind == IDENT and self.peek(2).is_(":"):
                self.pos += 1
                opt_names: list[str] = []
                values: list[Expr] = []
                while not self.at("}"):
                    opt_names.append(self.ident())
                    self.expect(":")
                    values.append(self.parse_expression())
                    if not self.accept(","):
                        break
                self.expect("}")
                expr = CallOptions(expr, tuple(opt_names), tuple(values), self.span_from(start))
            else:
                return expr

    def parse_call_args(self) -> tuple[list[Expr], Optional[tuple[str, ...]]]:
        self.expect("(")
        args: list[Expr] = []
        names: Optional[list[str]] = None
        if self.at("{"):
            self.pos += 1
            names = []
            while not self.at("}"):
                names.append(self.ident())
                self.expect(":")
                args.append(self.parse_expression())
                if not self.accept(","):
                    break
            self.expect("}")
        else:
            while not self.at(")"):
                args.append(self.parse_expression())
                if not self.accept(","):
                    break
        self.expect(")")
        return args, (tuple(names) if names is not None else None)

    def parse_primary(self) -> Expr:
        tok = self.tok
        if tok.is_("("):
            self.pos += 1
            elements: list[Optional[Expr]] = []
            saw_comma = False
            while not self.at(")"):
                if self.at(","):
                    elements.append(None)
                    self.pos += 1
                    saw_comma = True
                    continue
                elements.append(self.parse_expression())
                if self.accept(","):
                    saw_comma = True
                    if self.at(")"):
                        elements.append(None)
                else:
                    break
            self.expect(")")
            if len(elements) == 1 and not saw_comma and elements[0] is not None:
                return elements[0]
            return TupleExpr(tuple(elements), False, self.span_from(tok))
        if tok.is_("["):
            self.pos += 1
            items: list[Optional[Expr]] = []
            while not self.at("]"):
                items.append(self.parse_expression())
                if not self.accept(","):
                    break
            self.expect("]")
            return TupleExpr(tuple(items), True, self.span_from(tok))
        if tok.kind == NUMBER:
            self.pos += 1
            text = tok.text
            kind = LiteralKind.NUMBER
            digits = text[2:].replace("_", "") if text.lower().startswith("0x") else ""
            if len(digits) == 40:
                kind = LiteralKind.ADDRESS
            sub = None
            if self.tok.kind == IDENT and self.tok.text in _SUBDENOMINATIONS:
                sub = self.tok.text
                self.pos += 1
            return Literal(kind, text, sub, self.span_from(tok))
        if tok.kind in (STRING, HEXSTR):
            kind = LiteralKind.HEX if tok.kind == HEXSTR else LiteralKind.STRING
            parts = []
            while self.tok.kind in (STRING, HEXSTR):
                parts.append(unquote(self.tok.text) if kind is LiteralKind.STRING else self.tok.text)
                self.pos += 1
            return Literal(kind, "".join(parts), None, self.span_from(tok))
        if tok.is_("true") or tok.is_("false"):
            self.pos += 1
            return Literal(LiteralKind.BOOL, tok.text, None, self.span_from(tok))
        if tok.is_("new"):
            self.pos += 1
            t = self.parse_type()
            return NewExpr(t, self.span_from(tok))
        if tok.is_("msg") and self.peek().is_(".") and self.peek(2).text in _MSG_FIELDS:
            self.pos += 3
            return MsgAccess(self.tokens[self.pos - 1].text, self.span_from(tok))
        if tok.kind == IDENT:
            if tok.text in ("mapping", "function") or (
                is_elementary_type(tok.text) and self.peek().is_("[") and self.peek(2).is_("]")
            ):
                t = self.parse_type()
                return TypeExpr(t, self.span_from(tok))
            self.pos += 1
            if tok.text == "address" and self.at("payable"):
                self.pos += 1
                return Identifier("address payable", self.span_from(tok))
            return Identifier(tok.text, self.span_from(tok))
        raise ParseError(f"unexpected {tok.text or 'end of file'!r} in expression", self._tok_span(tok))


def _attach_parent(fn: FunctionDef) -> None:
    if fn.body is None:
        return
    for node in walk(fn.body):
        if isinstance(node, YulBlock):
            object.__setattr__(node, "parent_function", fn)


def parse_source(
    source: str,
    file_id: str,
    *,
    compiler_version: Optional[Version] = None,
    max_bytes: int = DEFAULT_MAX_SOURCE_BYTES,
) -> SourceUnit:
    """Parse one Solidity file.

    ``compiler_version`` (e.g. taken from explorer metadata) overrides the
    pragma when choosing the inline-assembly representation.
    """
    size = len(source.encode("utf-8"))
    if size > max_bytes:
        raise ParseError(f"source is {size} bytes, limit is {max_bytes}", Span(file_id, 0, 0))
    text = pragma_mod.pragma_text(source)
    version_range = pragma_mod.parse_version_expression(text) if text is not None else None
    diagnostics: list[Diagnostic] = []
    if text is not None and version_range is None:
        diagnostics.append(Diagnostic(f"unparseable pragma {text!r}", Span(file_id, 0, 0)))
    yul = pragma_mod.uses_yul_ast(version_range, compiler_version)
    parser = Parser(source, file_id, yul)
    contracts, imports, structs, enums = parser.parse_unit()
    seen: set[str] = set()
    unique: list[ContractDef] = []
    for c in contracts:
        if c.name in seen:
            diagnostics.append(Diagnostic(f"duplicate contract {c.name!r} ignored", c.span))
            continue
        seen.add(c.name)
        unique.append(c)
    diagnostics.extend(parser.unit_diagnostics)
    return SourceUnit(
        file_id=file_id, pragma_version=version_range, contracts=tuple(unique),
        imports=tuple(imports), structs=tuple(structs), enums=tuple(enums), pragma_text=text,
        uses_yul_ast=yul, diagnostics=tuple(diagnostics), source_length=len(source),
    )
