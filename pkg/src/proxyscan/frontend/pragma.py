"""``pragma solidity`` version-range parsing (npm-semver style, as solc uses)."""

from __future__ import annotations

import re
from typing import Optional

from .ast import Version, VersionRange

YUL_AST_MIN_VERSION = Version(0, 6, 0)

_PRAGMA_RE = re.compile(r"pragma\s+solidity\s+([^;]*);")
_COMMENT_RE = re.compile(r"//[^\n]*|/\*.*?\*/", re.S)
_VERSION_RE = re.compile(r"^v?(\d+)(?:\.(\d+|[xX*]))?(?:\.(\d+|[xX*]))?$")
_COMPARATOR_RE = re.compile(r"(\^|~|>=|<=|>|<|=)?\s*(v?[0-9xX*][0-9xX*.]*)")


def parse_version(text: str) -> Optional[Version]:
    """Parse ``0.8.9`` / ``v0.5.17+commit.d19bba13`` into a :class:`Version`."""
    text = text.strip()
    text = re.split(r"[+-]", text, maxsplit=1)[0]
    m = _VERSION_RE.match(text)
    if not m:
        return None
    parts = [m.group(1), m.group(2) or "0", m.group(3) or "0"]
    parts = ["0" if p in ("x", "X", "*") else p for p in parts]
    return Version(*(int(p) for p in parts))


def _partial(text: str) -> tuple[Optional[Version], int]:
    """Version plus how many components were spelled out."""
    text = text.lstrip("v")
    comps = [c for c in text.split(".") if c != ""]
    concrete = 0
    for c in comps:
        if c in ("x", "X", "*"):
            break
        if not c.isdigit():
            return None, 0
        concrete += 1
    if concrete == 0 or len(comps) > 3:
        return None, 0
    nums = [int(c) for c in comps[:concrete]] + [0] * (3 - concrete)
    return Version(*nums), concrete


def _bump(v: Version, position: int) -> Version:
    if position == 0:
        return Version(v.major + 1, 0, 0)
    if position == 1:
        return Version(v.major, v.minor + 1, 0)
    return Version(v.major, v.minor, v.patch + 1)


def _comparator_range(op: str, text: str) -> Optional[VersionRange]:
    v, concrete = _partial(text)
    if v is None:
        return None
    if op == "^":
        if v.major > 0 or concrete == 1:
            return VersionRange(v, _bump(v, 0))
        if v.minor > 0 or concrete == 2:
            return VersionRange(v, _bump(v, 1))
        return VersionRange(v, _bump(v, 2))
    if op == "~":
        return VersionRange(v, _bump(v, 1 if concrete >= 2 else 0))
    if op == ">=":
        return VersionRange(v, None)
    if op == ">":
        if concrete < 3:
            return VersionRange(_bump(v, concrete - 1), None)
        return VersionRange(v, None, lower_inclusive=False)
    if op == "<":
        return VersionRange(None, v)
    if op == "<=":
        if concrete < 3:
            return VersionRange(None, _bump(v, concrete - 1))
        return VersionRange(None, v, upper_inclusive=True)
    # exact or partial (x-range)
    if concrete < 3:
        return VersionRange(v, _bump(v, concrete - 1))
    return VersionRange(v, v, upper_inclusive=True)


def _intersect(a: VersionRange, b: VersionRange) -> VersionRange:
    lower, lower_inc = a.lower, a.lower_inclusive
    if b.lower is not None and (lower is None or b.lower > lower or (b.lower == lower and not b.lower_inclusive)):
        lower, lower_inc = b.lower, b.lower_inclusive
    upper, upper_inc = a.upper, a.upper_inclusive
    if b.upper is not None and (upper is None or b.upper < upper or (b.upper == upper and not b.upper_inclusive)):
        upper, upper_inc = b.upper, b.upper_inclusive
    return VersionRange(lower, upper, lower_inc, upper_inc)


def _hull(a: VersionRange, b: VersionRange) -> VersionRange:
    if a.lower is None or b.lower is None:
        lower, lower_inc = None, True
    elif a.lower < b.lower or (a.lower == b.lower and a.lower_inclusive):
        lower, lower_inc = a.lower, a.lower_inclusive
    else:
        lower, lower_inc = b.lower, b.lower_inclusive
    if a.upper is None or b.upper is None:
        upper, upper_inc = None, False
    elif a.upper > b.upper or (a.upper == b.upper and a.upper_inclusive):
        upper, upper_inc = a.upper, a.upper_inclusive
    else:
        upper, upper_inc = b.upper, b.upper_inclusive
    return VersionRange(lower, upper, lower_inc, upper_inc)


def parse_version_expression(expr: str) -> Optional[VersionRange]:
    """Parse the text after ``pragma solidity``.  ``||`` alternatives are merged
    into their convex hull."""
    result: Optional[VersionRange] = None
    for alternative in expr.split("||"):
        alternative = alternative.strip()
        if not alternative:
            return None
        hyphen = re.fullmatch(r"(\S+)\s+-\s+(\S+)", alternative)
        if hyphen:
            lo = _comparator_range(">=", hyphen.group(1))
            hi = _comparator_range("<=", hyphen.group(2))
            if lo is None or hi is None:
                return None
            current = _intersect(lo, hi)
        else:
            current = VersionRange(None, None)
            pos = 0
            found = False
            while pos < len(alternative):
                if alternative[pos].isspace():
                    pos += 1
                    continue
                m = _COMPARATOR_RE.match(alternative, pos)
                if not m or m.end() == pos:
                    return None
                rng = _comparator_range(m.group(1) or "=", m.group(2))
                if rng is None:
                    return None
                current = _intersect(current, rng)
                found = True
                pos = m.end()
            if not found:
                return None
        result = current if result is None else _hull(result, current)
    return result


def parse_pragma(source: str) -> Optional[VersionRange]:
    """Version range of the first ``pragma solidity`` directive, or ``None``."""
    text = pragma_text(source)
    if text is None:
        return None
    return parse_version_expression(text)


def pragma_text(source: str) -> Optional[str]:
    m = _PRAGMA_RE.search(_COMMENT_RE.sub(" ", source))
    if not m:
        return None
    return m.group(1).strip()


def uses_yul_ast(version_range: Optional[VersionRange], compiler_version: Optional[Version] = None) -> bool:
    """Whether inline assembly is represented as a Yul tree.

    An explicit compiler version wins.  Otherwise the lowest version the
    pragma admits decides; no pragma means the legacy string form.
    """
    if compiler_version is not None:
        return compiler_version >= YUL_AST_MIN_VERSION
    if version_range is None or version_range.lower is None:
        return False
    return version_range.lower >= YUL_AST_MIN_VERSION
