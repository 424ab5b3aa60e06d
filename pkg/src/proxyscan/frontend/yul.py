"""Parser for the supported Yul subset of inline assembly."""

from __future__ import annotations

from typing import Optional

from .ast import (
    Span, YulAssign, YulBody, YulCall, YulCase, YulExpr, YulExprStmt, YulIdentifier,
    YulIf, YulLet, YulLiteral, YulStmt, YulSwitch,
)
from .lexer import EOF, HEXSTR, IDENT, NUMBER, STRING, ParseError, Token, tokenize


class YulUnsupported(ParseError):
    """A construct outside the supported Yul subset."""


_UNSUPPORTED_KEYWORDS = {"for", "function", "break", "continue", "leave"}


class YulParser:
    def __init__(self, tokens: list[Token], file_id: str):
        self.tokens = tokens
        self.pos = 0
        self.file_id = file_id

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _span(self, start_tok: Token) -> Span:
        prev = self.tokens[self.pos - 1] if self.pos > 0 else start_tok
        return Span(self.file_id, start_tok.start, max(prev.end, start_tok.start))

    def _expect(self, text: str) -> Token:
        tok = self.tok
        if not tok.is_(text):
            raise ParseError(f"expected {text!r} in assembly, got {tok.text!r}",
                             Span(self.file_id, tok.start, tok.end))
        self.pos += 1
        return tok

    def parse_block(self) -> YulBody:
        start = self._expect("{")
        stmts: list[YulStmt] = []
        while not self.tok.is_("}"):
            if self.tok.kind == EOF:
                raise ParseError("unterminated assembly block", Span(self.file_id, start.start, self.tok.start))
            stmts.append(self.parse_statement())
        self._expect("}")
        return YulBody(tuple(stmts), self._span(start))

    def parse_statement(self) -> YulStmt:
        tok = self.tok
        if tok.is_("{"):
            return self.parse_block()
        if tok.kind == IDENT and tok.text in _UNSUPPORTED_KEYWORDS:
            raise YulUnsupported(f"unsupported Yul construct {tok.text!r}", Span(self.file_id, tok.start, tok.end))
        if tok.is_("let"):
            self.pos += 1
            names = self._identifier_list()
            value = None
            if self.tok.is_(":="):
                self.pos += 1
                value = self.parse_expression()
            return YulLet(tuple(names), value, self._span(tok))
        if tok.is_("if"):
            self.pos += 1
            cond = self.parse_expression()
            body = self.parse_block()
            return YulIf(cond, body, self._span(tok))
        if tok.is_("switch"):
            self.pos += 1
            expr = self.parse_expression()
            cases: list[YulCase] = []
            while self.tok.is_("case") or self.tok.is_("default"):
                case_tok = self.tok
                self.pos += 1
                value = None
                if case_tok.text == "case":
                    lit = self.parse_expression()
                    if not isinstance(lit, YulLiteral):
                        raise ParseError("switch case needs a literal", Span(self.file_id, case_tok.start, case_tok.end))
                    value = lit
                body = self.parse_block()
                cases.append(YulCase(value, body, self._span(case_tok)))
            if not cases:
                raise ParseError("switch without cases", Span(self.file_id, tok.start, tok.end))
            return YulSwitch(expr, tuple(cases), self._span(tok))
        if tok.kind == IDENT:
            # assignment: a, b := f()
            save = self.pos
            names = self._identifier_list()
            if self.tok.is_(":="):
                self.pos += 1
                value = self.parse_expression()
                return YulAssign(tuple(names), value, self._span(tok))
            self.pos = save
        if tok.is_("=:") or (tok.kind == IDENT and self.tokens[self.pos + 1].is_(":")):
            raise YulUnsupported("legacy stack assignment / label", Span(self.file_id, tok.start, tok.end))
        expr = self.parse_expression()
        return YulExprStmt(expr, self._span(tok))

    def _identifier_list(self) -> list[str]:
        names = [self._dotted_name()]
        while self.tok.is_(","):
            self.pos += 1
            names.append(self._dotted_name())
        return names

    def _dotted_name(self) -> str:
        tok = self.tok
        if tok.kind != IDENT:
            raise ParseError(f"expected identifier in assembly, got {tok.text!r}", Span(self.file_id, tok.start, tok.end))
        self.pos += 1
        name = tok.text
        while self.tok.is_(".") and self.tokens[self.pos + 1].kind == IDENT:
            name += "." + self.tokens[self.pos + 1].text
            self.pos += 2
        return name

    def parse_expression(self) -> YulExpr:
        tok = self.tok
        if tok.kind == NUMBER:
            self.pos += 1
            kind = "hex" if tok.text.lower().startswith("0x") else "number"
            return YulLiteral(kind, tok.text, self._span(tok))
        if tok.kind in (STRING, HEXSTR):
            self.pos += 1
            return YulLiteral("string", tok.text, self._span(tok))
        if tok.is_("true") or tok.is_("false"):
            self.pos += 1
            return YulLiteral("bool", tok.text, self._span(tok))
        if tok.kind == IDENT:
            name = self._dotted_name()
            if self.tok.is_("("):
                self.pos += 1
                args: list[YulExpr] = []
                while not self.tok.is_(")"):
                    args.append(self.parse_expression())
                    if self.tok.is_(","):
                        self.pos += 1
                    elif not self.tok.is_(")"):
                        raise ParseError(f"expected ',' or ')' in assembly call, got {self.tok.text!r}",
                                         Span(self.file_id, self.tok.start, self.tok.end))
                self._expect(")")
                return YulCall(name, tuple(args), self._span(tok))
            return YulIdentifier(name, self._span(tok))
        raise YulUnsupported(f"unsupported token {tok.text!r} in assembly", Span(self.file_id, tok.start, tok.end))


def parse_yul_tokens(tokens: list[Token], file_id: str) -> YulBody:
    """Parse ``tokens`` (starting at ``{``, ending at the matching ``}``)."""
    parser = YulParser(list(tokens) + [Token(EOF, "", tokens[-1].end, tokens[-1].end)], file_id)
    body = parser.parse_block()
    if parser.tok.kind != EOF:
        raise ParseError("trailing tokens after assembly block", Span(file_id, parser.tok.start, parser.tok.end))
    return body


def parse_yul_expression(text: str, file_id: str = "", offset: int = 0) -> Optional[YulExpr]:
    """Parse a standalone Yul expression fragment; ``None`` if it is not one."""
    try:
        tokens = tokenize(text, file_id)
        parser = YulParser(tokens, file_id)
        expr = parser.parse_expression()
        if parser.tok.kind != EOF:
            return None
    except ParseError:
        return None
    return expr
