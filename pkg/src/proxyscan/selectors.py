"""Function signatures and 4-byte selectors."""

from __future__ import annotations

import re
from typing import Optional

from .frontend.ast import (
    ArrayTypeName, ElementaryTypeName, FunctionDef, FunctionTypeName, MappingTypeName, StateVarDecl, TypeName,
    UserTypeName,
)
from .keccak import keccak256


class CanonicalizationError(ValueError):
    """The text is not a function signature."""


_ALIASES = {"uint": "uint256", "int": "int256", "byte": "bytes1", "fixed": "fixed128x18", "ufixed": "ufixed128x18"}
_DROP_WORDS = {"memory", "calldata", "storage", "indexed", "payable"}
_NAME_RE = re.compile(r"[A-Za-z_$][\w$]*")
_TYPE_RE = re.compile(r"([A-Za-z_$][\w$]*)((?:\[\d*\])*)")


def _split_top(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise CanonicalizationError("unbalanced parentheses")
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise CanonicalizationError("unbalanced parentheses")
    parts.append("".join(cur))
    return parts


def _canonical_param(text: str) -> str:
    text = text.strip()
    if not text:
        raise CanonicalizationError("empty parameter")
    if text.startswith("("):
        close = _matching(text, 0)
        inner = text[1:close]
        rest = text[close + 1:].strip()
        suffix_match = re.match(r"((?:\[\s*\d*\s*\])*)", rest)
        suffix = re.sub(r"\s", "", suffix_match.group(1)) if suffix_match else ""
        members = [] if not inner.strip() else [_canonical_param(p) for p in _split_top(inner)]
        return "(" + ",".join(members) + ")" + suffix
    words = [w for w in re.split(r"\s+", re.sub(r"\s*(\[)\s*", r"\1", re.sub(r"\s*\]", "]", text))) if w]
    type_word = words[0]
    rest = [w for w in words[1:] if w not in _DROP_WORDS]
    if len(rest) > 1:
        raise CanonicalizationError(f"cannot read parameter {text!r}")
    if rest and not _NAME_RE.fullmatch(rest[0]):
        raise CanonicalizationError(f"bad parameter name in {text!r}")
    m = _TYPE_RE.fullmatch(type_word)
    if not m:
        raise CanonicalizationError(f"bad type {type_word!r}")
    base, suffix = m.group(1), m.group(2)
    return _ALIASES.get(base, base) + suffix


def _matching(text: str, start: int) -> int:
    depth = 0
    for i in range(start, len(text)):
        if text[i] == "(":
            depth += 1
        elif text[i] == ")":
            depth -= 1
            if depth == 0:
                return i
    raise CanonicalizationError("unbalanced parentheses")


def canonicalize_signature(signature: str) -> str:
    """Normalize ``name(type, ...)``: drop whitespace, parameter names and data
    locations, expand type aliases."""
    text = signature.strip()
    if text.startswith("function "):
        text = text[len("function "):].strip()
    open_idx = text.find("(")
    if open_idx <= 0:
        raise CanonicalizationError(f"no function name or parameter list in {signature!r}")
    name = text[:open_idx].strip()
    if not _NAME_RE.fullmatch(name):
        raise CanonicalizationError(f"bad function name {name!r}")
    close = _matching(text, open_idx)
    if text[close + 1:].strip():
        raise CanonicalizationError(f"trailing text after parameter list in {signature!r}")
    inner = text[open_idx + 1:close]
    params = [] if not inner.strip() else [_canonical_param(p) for p in _split_top(inner)]
    return f"{name}({','.join(params)})"


def function_selector(signature: str) -> bytes:
    """First four bytes of the Keccak-256 hash of the canonical signature."""
    return keccak256(canonicalize_signature(signature).encode("ascii"))[:4]


def selector_hex(signature: str) -> str:
    return "0x" + function_selector(signature).hex()


# ---------------------------------------------------------------------------
# Signatures from declarations


def abi_type(t: Optional[TypeName], unit=None) -> str:
    """ABI spelling of a declared type.  Contracts become ``address``, enums
    ``uint8`` and structs tuples."""
    if isinstance(t, ElementaryTypeName):
        name = t.name.replace("address payable", "address")
        return _ALIASES.get(name, name)
    if isinstance(t, ArrayTypeName):
        from .frontend.printer import print_expr
        length = print_expr(t.length) if t.length is not None else ""
        return f"{abi_type(t.base, unit)}[{length}]"
    if isinstance(t, UserTypeName):
        short = t.path.rsplit(".", 1)[-1]
        if unit is not None:
            if short in unit.contracts:
                return "address"
            if t.path in unit.enums or short in unit.enums:
                return "uint8"
            struct = unit.structs.get(t.path) or unit.structs.get(short)
            if struct is not None:
                return "(" + ",".join(abi_type(m.type_name, unit) for m in struct.members) + ")"
        return short
    if isinstance(t, FunctionTypeName):
        return "function"
    if isinstance(t, MappingTypeName):
        return "mapping"
    return ""


def function_signature(fn: FunctionDef, unit=None) -> str:
    return f"{fn.name}({','.join(abi_type(p.type_name, unit) for p in fn.params)})"


def getter_signature(var: StateVarDecl, unit=None) -> str:
    """Signature of the getter the compiler generates for a public state variable."""
    params: list[str] = []
    t = var.type_name
    while True:
        if isinstance(t, MappingTypeName):
            params.append(abi_type(t.key, unit))
            t = t.value
        elif isinstance(t, ArrayTypeName):
            params.append("uint256")
            t = t.base
        else:
            break
    return f"{var.name}({','.join(params)})"
