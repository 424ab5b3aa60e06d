"""Render a syntax tree back to Solidity text.

Output is canonical rather than faithful: binary and unary operands are
fully parenthesised so reparsing yields the same tree.
"""

from __future__ import annotations

from .ast import (
    ArrayTypeName, Assignment, AssemblyStmt, BinaryOp, Block, Call, CallOptions, Conditional,
    ContractDef, ContractKind, ElementaryTypeName, EmitStmt, EnumDef, ExpressionStmt, ForStmt,
    FunctionDef, FunctionKind, FunctionTypeName, Identifier, IfStmt, IndexAccess, IndexRange,
    Literal, LiteralKind, MappingTypeName, MemberAccess, MsgAccess, NewExpr, Param, RequireStmt,
    ReturnStmt, RevertStmt, SimpleStmt, SourceUnit, StateVarDecl, StructDef, TupleExpr, TypeExpr,
    UnaryOp, UserTypeName, VarDeclStmt, WhileStmt, YulAssign, YulBody, YulCall, YulExprStmt,
    YulIdentifier, YulIf, YulLet, YulLiteral, YulSwitch,
)

_INDENT = "    "


def print_type(t) -> str:
    if isinstance(t, ElementaryTypeName):
        return t.name
    if isinstance(t, UserTypeName):
        return t.path
    if isinstance(t, MappingTypeName):
        return f"mapping({print_type(t.key)} => {print_type(t.value)})"
    if isinstance(t, ArrayTypeName):
        length = print_expr(t.length) if t.length is not None else ""
        return f"{print_type(t.base)}[{length}]"
    if isinstance(t, FunctionTypeName):
        return t.text
    raise TypeError(f"not a type name: {t!r}")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def print_expr(e) -> str:
    if isinstance(e, Identifier):
        return e.name
    if isinstance(e, MsgAccess):
        return f"msg.{e.field_name}"
    if isinstance(e, MemberAccess):
        return f"{print_expr(e.expression)}.{e.member}"
    if isinstance(e, IndexAccess):
        idx = print_expr(e.index) if e.index is not None else ""
        return f"{print_expr(e.base)}[{idx}]"
    if isinstance(e, IndexRange):
        lo = print_expr(e.start) if e.start is not None else ""
        hi = print_expr(e.end) if e.end is not None else ""
        return f"{print_expr(e.base)}[{lo}:{hi}]"
    if isinstance(e, CallOptions):
        opts = ", ".join(f"{n}: {print_expr(v)}" for n, v in zip(e.names, e.values))
        return f"{print_expr(e.expression)}{{{opts}}}"
    if isinstance(e, Call):
        if e.arg_names is not None:
            inner = ", ".join(f"{n}: {print_expr(a)}" for n, a in zip(e.arg_names, e.args))
            return f"{print_expr(e.callee)}({{{inner}}})"
        return f"{print_expr(e.callee)}({', '.join(print_expr(a) for a in e.args)})"
    if isinstance(e, Assignment):
        return f"{print_expr(e.lhs)} {e.op} {print_expr(e.rhs)}"
    if isinstance(e, Literal):
        if e.kind is LiteralKind.STRING:
            text = _quote(e.value)
        else:
            text = e.value
        return f"{text} {e.subdenomination}" if e.subdenomination else text
    if isinstance(e, BinaryOp):
        return f"({print_expr(e.left)} {e.op} {print_expr(e.right)})"
    if isinstance(e, UnaryOp):
        if e.prefix:
            sep = " " if e.op == "delete" else ""
            return f"({e.op}{sep}{print_expr(e.operand)})"
        return f"({print_expr(e.operand)}{e.op})"
    if isinstance(e, Conditional):
        return f"({print_expr(e.condition)} ? {print_expr(e.if_true)} : {print_expr(e.if_false)})"
    if isinstance(e, TupleExpr):
        items = ", ".join(print_expr(x) if x is not None else "" for x in e.elements)
        if e.is_array:
            return f"[{items}]"
        return f"({items})"
    if isinstance(e, NewExpr):
        return f"new {print_type(e.type_name)}"
    if isinstance(e, TypeExpr):
        return print_type(e.type_name)
    raise TypeError(f"not an expression: {e!r}")


def print_param(p: Param) -> str:
    parts = [print_type(p.type_name)]
    if p.indexed:
        parts.append("indexed")
    if p.storage_location:
        parts.append(p.storage_location)
    if p.name:
        parts.append(p.name)
    return " ".join(parts)


def print_yul_expr(e) -> str:
    if isinstance(e, YulIdentifier):
        return e.name
    if isinstance(e, YulLiteral):
        return e.value
    if isinstance(e, YulCall):
        return f"{e.name}({', '.join(print_yul_expr(a) for a in e.args)})"
    raise TypeError(f"not a Yul expression: {e!r}")


def _yul_lines(stmt, depth: int) -> list[str]:
    pad = _INDENT * depth
    if isinstance(stmt, YulBody):
        lines = [pad + "{"]
        for s in stmt.statements:
            lines.extend(_yul_lines(s, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, YulLet):
        text = f"let {', '.join(stmt.names)}"
        if stmt.value is not None:
            text += f" := {print_yul_expr(stmt.value)}"
        return [pad + text]
    if isinstance(stmt, YulAssign):
        return [pad + f"{', '.join(stmt.names)} := {print_yul_expr(stmt.value)}"]
    if isinstance(stmt, YulExprStmt):
        return [pad + print_yul_expr(stmt.expression)]
    if isinstance(stmt, YulIf):
        body = _yul_lines(stmt.body, depth)
        return [pad + f"if {print_yul_expr(stmt.condition)} " + body[0].strip()] + body[1:]
    if isinstance(stmt, YulSwitch):
        lines = [pad + f"switch {print_yul_expr(stmt.expression)}"]
        for case in stmt.cases:
            head = "default" if case.value is None else f"case {case.value.value}"
            body = _yul_lines(case.body, depth)
            lines.append(pad + head + " " + body[0].strip())
            lines.extend(body[1:])
        return lines
    raise TypeError(f"not a Yul statement: {stmt!r}")


def _stmt_lines(stmt, depth: int) -> list[str]:
    pad = _INDENT * depth
    if isinstance(stmt, Block):
        head = "unchecked {" if stmt.unchecked else "{"
        lines = [pad + head]
        for s in stmt.statements:
            lines.extend(_stmt_lines(s, depth + 1))
        lines.append(pad + "}")
        return lines
    if isinstance(stmt, ExpressionStmt):
        return [pad + print_expr(stmt.expression) + ";"]
    if isinstance(stmt, VarDeclStmt):
        if stmt.is_tuple:
            inner = ", ".join(print_param(d) if d is not None else "" for d in stmt.declarations)
            head = f"({inner})"
        else:
            head = print_param(stmt.declarations[0])
        if stmt.initializer is not None:
            head += f" = {print_expr(stmt.initializer)}"
        return [pad + head + ";"]
    if isinstance(stmt, IfStmt):
        lines = [pad + f"if ({print_expr(stmt.condition)})"]
        lines.extend(_branch_lines(stmt.then_branch, depth))
        if stmt.else_branch is not None:
            lines.append(pad + "else")
            lines.extend(_branch_lines(stmt.else_branch, depth))
        return lines
    if isinstance(stmt, ReturnStmt):
        if stmt.value is None:
            return [pad + "return;"]
        return [pad + f"return {print_expr(stmt.value)};"]
    if isinstance(stmt, RequireStmt):
        args = print_expr(stmt.condition)
        if stmt.message is not None:
            args += f", {print_expr(stmt.message)}"
        return [pad + f"{stmt.callee}({args});"]
    if isinstance(stmt, EmitStmt):
        return [pad + f"emit {print_expr(stmt.event)};"]
    if isinstance(stmt, RevertStmt):
        if isinstance(stmt.error, Call) and isinstance(stmt.error.callee, Identifier) and stmt.error.callee.name == "revert":
            return [pad + print_expr(stmt.error) + ";"]
        return [pad + f"revert {print_expr(stmt.error)};"]
    if isinstance(stmt, SimpleStmt):
        return [pad + f"{stmt.keyword};"]
    if isinstance(stmt, AssemblyStmt):
        block = stmt.block
        head = "assembly"
        if block.dialect:
            head += f" {_quote(block.dialect)}"
        if block.flags:
            head += " (" + ", ".join(_quote(f) for f in block.flags) + ")"
        if block.raw_text is not None:
            return [pad + head + " {" + block.raw_text + "}"]
        body = _yul_lines(block.yul_ast, depth)
        return [pad + head + " " + body[0].strip()] + body[1:]
    if isinstance(stmt, ForStmt):
        init = ""
        if stmt.init is not None:
            init = _stmt_lines(stmt.init, 0)[0].rstrip(";")
        cond = print_expr(stmt.condition) if stmt.condition is not None else ""
        post = print_expr(stmt.post) if stmt.post is not None else ""
        lines = [pad + f"for ({init}; {cond}; {post})"]
        lines.extend(_branch_lines(stmt.body, depth))
        return lines
    if isinstance(stmt, WhileStmt):
        if stmt.do_while:
            lines = [pad + "do"]
            lines.extend(_branch_lines(stmt.body, depth))
            lines.append(pad + f"while ({print_expr(stmt.condition)});")
            return lines
        lines = [pad + f"while ({print_expr(stmt.condition)})"]
        lines.extend(_branch_lines(stmt.body, depth))
        return lines
    raise TypeError(f"not a statement: {stmt!r}")


def _branch_lines(stmt, depth: int) -> list[str]:
    if isinstance(stmt, Block):
        return _stmt_lines(stmt, depth)
    return _stmt_lines(stmt, depth + 1)


def _function_lines(fn: FunctionDef, depth: int) -> list[str]:
    pad = _INDENT * depth
    params = ", ".join(print_param(p) for p in fn.params)
    if fn.kind is FunctionKind.MODIFIER:
        head = f"modifier {fn.name}({params})"
    elif fn.kind is FunctionKind.CONSTRUCTOR:
        # legacy constructors keep the contract name
        head = f"function {fn.name}({params})" if fn.name else f"constructor({params})"
    elif fn.kind is FunctionKind.FALLBACK:
        head = f"function({params})" if fn.legacy_fallback else f"fallback({params})"
    elif fn.kind is FunctionKind.RECEIVE:
        head = f"receive({params})"
    else:
        head = f"function {fn.name}({params})"
    if fn.kind is not FunctionKind.MODIFIER:
        head += f" {fn.visibility}"
        if fn.mutability != "nonpayable":
            head += f" {fn.mutability}"
    if fn.is_virtual:
        head += " virtual"
    if fn.is_override:
        head += " override"
    for m in fn.modifiers:
        head += f" {m.name}"
        if m.args is not None:
            head += "(" + ", ".join(print_expr(a) for a in m.args) + ")"
    if fn.returns:
        head += " returns (" + ", ".join(print_param(p) for p in fn.returns) + ")"
    if fn.body is None:
        return [pad + head + ";"]
    body = _stmt_lines(fn.body, depth)
    return [pad + head + " " + body[0].strip()] + body[1:]


def _struct_lines(s: StructDef, depth: int) -> list[str]:
    pad = _INDENT * depth
    lines = [pad + f"struct {s.name} {{"]
    for m in s.members:
        lines.append(pad + _INDENT + f"{print_type(m.type_name)} {m.name};")
    lines.append(pad + "}")
    return lines


def _enum_lines(e: EnumDef, depth: int) -> list[str]:
    return [_INDENT * depth + f"enum {e.name} {{ {', '.join(e.members)} }}"]


def _state_var_line(v: StateVarDecl) -> str:
    text = f"{print_type(v.type_name)} {v.visibility}"
    if v.mutability != "mutable":
        text += f" {v.mutability}"
    text += f" {v.name}"
    if v.initializer is not None:
        text += f" = {print_expr(v.initializer)}"
    return text + ";"


def print_contract(c: ContractDef) -> str:
    if c.kind is ContractKind.ABSTRACT:
        head = f"abstract contract {c.name}"
    else:
        head = f"{c.kind.value} {c.name}"
    if c.bases:
        head += " is " + ", ".join(c.bases)
    lines = [head + " {"]
    for s in c.structs:
        lines.extend(_struct_lines(s, 1))
    for e in c.enums:
        lines.extend(_enum_lines(e, 1))
    for ev in c.events:
        lines.append(_INDENT + f"event {ev.name}();")
    for v in c.state_vars:
        lines.append(_INDENT + _state_var_line(v))
    for m in c.modifiers:
        lines.extend(_function_lines(m, 1))
    for f in c.functions:
        lines.extend(_function_lines(f, 1))
    lines.append("}")
    return "\n".join(lines)


def print_source_unit(unit: SourceUnit) -> str:
    parts: list[str] = []
    if unit.pragma_text is not None:
        parts.append(f"pragma solidity {unit.pragma_text};")
    for path in unit.imports:
        parts.append(f"import {_quote(path)};")
    for s in unit.structs:
        parts.append("\n".join(_struct_lines(s, 0)))
    for e in unit.enums:
        parts.append("\n".join(_enum_lines(e, 0)))
    for c in unit.contracts:
        parts.append(print_contract(c))
    return "\n\n".join(parts) + "\n"
