"""Solidity subset frontend: tokenizer, parser, pragma handling, printer."""

from .ast import ContractDef, FunctionDef, SourceUnit, StateVarDecl, Version, VersionRange, YulBlock
from .lexer import ParseError
from .parser import parse_source
from .pragma import parse_pragma
from .printer import print_source_unit

__all__ = [
    "ContractDef", "FunctionDef", "ParseError", "SourceUnit", "StateVarDecl", "Version",
    "VersionRange", "YulBlock", "parse_pragma", "parse_source", "print_source_unit",
]
