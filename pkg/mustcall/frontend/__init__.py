# MiniOO front end: lexer, parser, syntax tree and pretty printer
from mustcall.frontend.lexer import Token, TokenKind, lex
from mustcall.frontend.parser import parse, parse_attribute, parse_source
from mustcall.frontend.printer import pretty

__all__ = [
    "Token",
    "TokenKind",
    "lex",
    "parse",
    "parse_attribute",
    "parse_source",
    "pretty",
]
