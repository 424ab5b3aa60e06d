"""Compile-time evaluation of the slot expressions proxies use."""

from __future__ import annotations

from typing import Callable, Optional

from .frontend.ast import (
    BinaryOp, Call, Identifier, Literal, LiteralKind, MemberAccess, TupleExpr, YulCall, YulIdentifier,
    YulLiteral,
)
from .frontend.lexer import unquote
from .keccak import keccak256

MOD = 1 << 256

Lookup = Callable[[str], Optional[int]]

_CONVERSIONS = {"address", "payable", "uint", "uint256", "uint160", "bytes32", "bytes20"}
_SUBDENOMINATIONS = {
    "wei": 1, "gwei": 10**9, "szabo": 10**12, "finney": 10**15, "ether": 10**18,
    "seconds": 1, "minutes": 60, "hours": 3600, "days": 86400, "weeks": 604800,
}


def _int(text: str) -> Optional[int]:
    try:
        return int(text.replace("_", ""), 0)
    except ValueError:
        try:
            return int(float(text.replace("_", "")))
        except ValueError:
            return None


def _no_lookup(_name: str) -> Optional[int]:
    return None


def literal_bytes(expr: object) -> Optional[bytes]:
    """Byte content of a string-like literal (or ``abi.encodePacked`` of one)."""
    if isinstance(expr, Literal):
        if expr.kind is LiteralKind.STRING:
            return expr.value.encode("utf-8")
        if expr.kind is LiteralKind.HEX:
            text = expr.value
            if text.startswith("hex"):
                text = unquote(text)
            try:
                return bytes.fromhex(text.replace("_", ""))
            except ValueError:
                return None
    if isinstance(expr, YulLiteral) and expr.kind == "string":
        return unquote(expr.value).encode("utf-8")
    if isinstance(expr, Call) and isinstance(expr.callee, MemberAccess) and len(expr.args) == 1:
        callee = expr.callee
        if isinstance(callee.expression, Identifier) and callee.expression.name == "abi" \
                and callee.member in ("encodePacked", "encode"):
            return literal_bytes(expr.args[0]) if callee.member == "encodePacked" else None
    return None


def evaluate(expr: object, lookup: Optional[Lookup] = None, _depth: int = 0) -> Optional[int]:
    """Value of ``expr`` modulo 2**256, or ``None`` if it is not a constant.

    :param lookup: maps an identifier to its constant value, if any
    """
    if expr is None or _depth > 32:
        return None
    lookup = lookup or _no_lookup
    rec = lambda e: evaluate(e, lookup, _depth + 1)  # noqa: E731
    if isinstance(expr, Literal):
        if expr.kind in (LiteralKind.NUMBER, LiteralKind.ADDRESS):
            v = _int(expr.value)
            if v is not None and expr.subdenomination:
                v *= _SUBDENOMINATIONS.get(expr.subdenomination, 1)
            return None if v is None else v % MOD
        if expr.kind is LiteralKind.BOOL:
            return 1 if expr.value == "true" else 0
        return None
    if isinstance(expr, YulLiteral):
        if expr.kind in ("hex", "number"):
            v = _int(expr.value)
            return None if v is None else v % MOD
        if expr.kind == "bool":
            return 1 if expr.value == "true" else 0
        return None
    if isinstance(expr, (Identifier, YulIdentifier)):
        return lookup(expr.name)
    if isinstance(expr, MemberAccess) and isinstance(expr.expression, Identifier):
        return lookup(f"{expr.expression.name}.{expr.member}")
    if isinstance(expr, TupleExpr) and len(expr.elements) == 1:
        return rec(expr.elements[0])
    if isinstance(expr, Call) and isinstance(expr.callee, Identifier) and len(expr.args) == 1:
        name = expr.callee.name
        if name in ("keccak256", "sha3"):
            data = literal_bytes(expr.args[0])
            return None if data is None else int.from_bytes(keccak256(data), "big")
        if name in _CONVERSIONS or name.startswith(("uint", "bytes")):
            return rec(expr.args[0])
        return None
    if isinstance(expr, BinaryOp):
        a, b = rec(expr.left), rec(expr.right)
        if a is None or b is None:
            return None
        return _binary(expr.op, a, b)
    if isinstance(expr, YulCall):
        args = [rec(a) for a in expr.args]
        if any(a is None for a in args):
            return None
        ops = {"add": "+", "sub": "-", "mul": "*", "and": "&", "or": "|", "xor": "^"}
        if expr.name in ops and len(args) == 2:
            return _binary(ops[expr.name], args[0], args[1])
        if expr.name == "shl" and len(args) == 2:
            return _binary("<<", args[1], args[0])
        if expr.name == "shr" and len(args) == 2:
            return _binary(">>", args[1], args[0])
        if expr.name == "not" and len(args) == 1:
            return (~args[0]) % MOD
        return None
    return None


def _binary(op: str, a: int, b: int) -> Optional[int]:
    if op == "+":
        return (a + b) % MOD
    if op == "-":
        return (a - b) % MOD
    if op == "*":
        return (a * b) % MOD
    if op == "&":
        return a & b
    if op == "|":
        return a | b
    if op == "^":
        return a ^ b
    if op == "<<":
        return (a << b) % MOD if b < 256 else 0
    if op == ">>":
        return a >> b
    if op == "**":
        return pow(a, b, MOD)
    return None


def slot_hex(value: int) -> str:
    """Canonical 0x-prefixed 64-digit spelling of a slot."""
    return "0x" + format(value, "064x")
