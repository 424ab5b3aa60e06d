"""Tokenizer shared by the Solidity and Yul parsers."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .ast import Span


class ParseError(Exception):
    """Unrecoverable syntax failure."""

    def __init__(self, message: str, span: Span | None = None):
        self.message = message
        self.span = span
        where = f"{span.file_id}:{span.start}: " if span else ""
        super().__init__(f"{where}{message}")


IDENT = "ident"
NUMBER = "number"
STRING = "string"
HEXSTR = "hexstr"
PUNCT = "punct"
EOF = "eof"


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int

    def is_(self, text: str) -> bool:
        return self.kind in (PUNCT, IDENT) and self.text == text

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}@{self.start})"


# longest operators first
_PUNCTUATION = sorted(
    """
    >>>= <<= >>= ** == != <= >= && || ++ -- += -= *= /= %= |= &= ^= => -> := >>> << >>
    ( ) [ ] { } ; , . ? : = + - * / % ! ~ & | ^ < > @
    """.split(),
    key=len,
    reverse=True,
)

_IDENT_RE = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*")
_NUMBER_RE = re.compile(
    r"0[xX][0-9a-fA-F_]+|(?:[0-9][0-9_]*(?:\.[0-9][0-9_]*)?|\.[0-9][0-9_]*)(?:[eE]-?[0-9_]+)?"
)
_WS_RE = re.compile(r"\s+")


def tokenize(source: str, file_id: str = "") -> list[Token]:
    return list(_tokens(source, file_id))


def _tokens(source: str, file_id: str) -> Iterator[Token]:
    pos = 0
    n = len(source)
    while pos < n:
        ch = source[pos]
        m = _WS_RE.match(source, pos)
        if m:
            pos = m.end()
            continue
        if source.startswith("//", pos):
            nl = source.find("\n", pos)
            pos = n if nl < 0 else nl + 1
            continue
        if source.startswith("/*", pos):
            close = source.find("*/", pos + 2)
            if close < 0:
                raise ParseError("unterminated block comment", Span(file_id, pos, n))
            pos = close + 2
            continue
        if ch in "\"'":
            end = _string_end(source, pos, file_id)
            yield Token(STRING, source[pos:end], pos, end)
            pos = end
            continue
        m = _IDENT_RE.match(source, pos)
        if m:
            word = m.group()
            # hex"..." and unicode"..." literal prefixes
            if word in ("hex", "unicode") and m.end() < n and source[m.end()] in "\"'":
                end = _string_end(source, m.end(), file_id)
                kind = HEXSTR if word == "hex" else STRING
                yield Token(kind, source[pos:end], pos, end)
                pos = end
                continue
            yield Token(IDENT, word, pos, m.end())
            pos = m.end()
            continue
        if ch.isdigit() or (ch == "." and pos + 1 < n and source[pos + 1].isdigit()):
            m = _NUMBER_RE.match(source, pos)
            assert m is not None
            yield Token(NUMBER, m.group(), pos, m.end())
            pos = m.end()
            continue
        for op in _PUNCTUATION:
            if source.startswith(op, pos):
                yield Token(PUNCT, op, pos, pos + len(op))
                pos += len(op)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", Span(file_id, pos, pos + 1))
    yield Token(EOF, "", n, n)


def _string_end(source: str, start: int, file_id: str) -> int:
    quote = source[start]
    pos = start + 1
    n = len(source)
    while pos < n:
        c = source[pos]
        if c == "\\":
            pos += 2
            continue
        if c == quote:
            return pos + 1
        if c == "\n":
            break
        pos += 1
    raise ParseError("unterminated string literal", Span(file_id, start, min(pos, n)))


def unquote(text: str) -> str:
    """Strip quotes (and a ``hex``/``unicode`` prefix) from a string token."""
    for prefix in ("hex", "unicode"):
        if text.startswith(prefix):
            text = text[len(prefix):]
            break
    body = text[1:-1]
    if "\\" not in body:
        return body
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\" and i + 1 < len(body):
            nxt = body[i + 1]
            simple = {"n": "\n", "t": "\t", "r": "\r", "\\": "\\", "'": "'", '"': '"', "0": "\0"}
            if nxt in simple:
                out.append(simple[nxt])
                i += 2
                continue
            if nxt == "x" and i + 3 < len(body) + 1:
                out.append(chr(int(body[i + 2:i + 4], 16)))
                i += 4
                continue
            if nxt == "u":
                out.append(chr(int(body[i + 2:i + 6], 16)))
                i += 6
                continue
            if nxt == "\n":
                i += 2
                continue
        out.append(c)
        i += 1
    return "".join(out)
