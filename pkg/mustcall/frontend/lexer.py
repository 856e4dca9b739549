"""
Tokenizer for MiniOO source text.
"""

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import List

from mustcall.errors import LexError
from mustcall.frontend.ast_nodes import SourceUnit, Span

logger = logging.getLogger(__name__)


class TokenKind(str, Enum):
    IDENT = "IDENT"
    INT = "INT"
    STRING = "STRING"
    # Keywords
    CLASS = "CLASS"
    NEW = "NEW"
    IF = "IF"
    ELSE = "ELSE"
    WHILE = "WHILE"
    TRY = "TRY"
    CATCH = "CATCH"
    FINALLY = "FINALLY"
    USING = "USING"
    RETURN = "RETURN"
    THROW = "THROW"
    NULL = "NULL"
    THIS = "THIS"
    TRUE = "TRUE"
    FALSE = "FALSE"
    # Punctuation
    LBRACKET = "LBRACKET"
    RBRACKET = "RBRACKET"
    LPAREN = "LPAREN"
    RPAREN = "RPAREN"
    LBRACE = "LBRACE"
    RBRACE = "RBRACE"
    COMMA = "COMMA"
    SEMI = "SEMI"
    DOT = "DOT"
    COLON = "COLON"
    EQ = "EQ"
    NEQ = "NEQ"
    LE = "LE"
    GE = "GE"
    LT = "LT"
    GT = "GT"
    AND = "AND"
    OR = "OR"
    ASSIGN = "ASSIGN"
    PLUS = "PLUS"
    MINUS = "MINUS"
    STAR = "STAR"
    SLASH = "SLASH"
    PERCENT = "PERCENT"
    BANG = "BANG"
    EOF = "EOF"


KEYWORDS = {
    "class": TokenKind.CLASS,
    "new": TokenKind.NEW,
    "if": TokenKind.IF,
    "else": TokenKind.ELSE,
    "while": TokenKind.WHILE,
    "try": TokenKind.TRY,
    "catch": TokenKind.CATCH,
    "finally": TokenKind.FINALLY,
    "using": TokenKind.USING,
    "return": TokenKind.RETURN,
    "throw": TokenKind.THROW,
    "null": TokenKind.NULL,
    "this": TokenKind.THIS,
    "true": TokenKind.TRUE,
    "false": TokenKind.FALSE,
}

# Two-character operators come first so that `!=` never lexes as `!` `=`
PUNCTUATION = [
    ("==", TokenKind.EQ),
    ("!=", TokenKind.NEQ),
    ("<=", TokenKind.LE),
    (">=", TokenKind.GE),
    ("&&", TokenKind.AND),
    ("||", TokenKind.OR),
    ("[", TokenKind.LBRACKET),
    ("]", TokenKind.RBRACKET),
    ("(", TokenKind.LPAREN),
    (")", TokenKind.RPAREN),
    ("{", TokenKind.LBRACE),
    ("}", TokenKind.RBRACE),
    (",", TokenKind.COMMA),
    (";", TokenKind.SEMI),
    (".", TokenKind.DOT),
    (":", TokenKind.COLON),
    ("<", TokenKind.LT),
    (">", TokenKind.GT),
    ("=", TokenKind.ASSIGN),
    ("+", TokenKind.PLUS),
    ("-", TokenKind.MINUS),
    ("*", TokenKind.STAR),
    ("/", TokenKind.SLASH),
    ("%", TokenKind.PERCENT),
    ("!", TokenKind.BANG),
]
PUNCTUATION_KINDS = dict(PUNCTUATION)

TOKEN_PATTERN = re.compile(
    r"(?P<newline>\n)"
    r"|(?P<space>[ \t\r]+)"
    r"|(?P<comment>//[^\n]*)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>[0-9]+(?:\.[0-9]+)?)"
    r'|(?P<string>"(?:[^"\\\n]|\\.)*")'
    r"|(?P<punct>" + "|".join(re.escape(text) for text, _ in PUNCTUATION) + r")"
)


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    span: Span

    def __str__(self) -> str:
        if self.kind in (TokenKind.IDENT, TokenKind.INT, TokenKind.STRING):
            return f"{self.kind.value}({self.text})"
        return self.kind.value


def lex(unit: SourceUnit) -> List[Token]:
    """Tokenize a source unit; the result always ends with an EOF token."""
    tokens: List[Token] = []
    text = unit.text
    pos = 0
    line = 1
    line_start = 0

    while pos < len(text):
        match = TOKEN_PATTERN.match(text, pos)
        span = Span(unit.path, line, pos - line_start + 1)
        if match is None:
            raise LexError(f"unexpected character {text[pos]!r}", span)

        group = match.lastgroup
        lexeme = match.group()
        if group == "newline":
            line += 1
            line_start = match.end()
        elif group == "ident":
            tokens.append(Token(KEYWORDS.get(lexeme, TokenKind.IDENT), lexeme, span))
        elif group == "int":
            tokens.append(Token(TokenKind.INT, lexeme, span))
        elif group == "string":
            tokens.append(Token(TokenKind.STRING, lexeme, span))
        elif group == "punct":
            tokens.append(Token(PUNCTUATION_KINDS[lexeme], lexeme, span))
        pos = match.end()

    tokens.append(Token(TokenKind.EOF, "", Span(unit.path, line, pos - line_start + 1)))
    logger.debug("Lexed %s into %d tokens", unit.path, len(tokens))
    return tokens
