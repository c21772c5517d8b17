"""Tokenizer for the Cypher subset."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import LexError

KEYWORDS = frozenset({
    "MATCH", "OPTIONAL", "WHERE", "WITH", "RETURN", "ORDER", "BY", "ASC", "DESC",
    "AS", "AND", "OR", "NOT", "IN", "TRUE", "FALSE", "NULL",
})

# token kinds
KW = "KW"
IDENT = "IDENT"
STRING = "STRING"
INT = "INT"
FLOAT = "FLOAT"
PUNCT = "PUNCT"
EOF = "EOF"

_PUNCT2 = ("<>", "<=", ">=")
_PUNCT1 = "()[]{}:,.-<>=|"

_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {'"': '"', "\\": "\\", "/": "/", "n": "\n", "t": "\t", "r": "\r",
            "b": "\b", "f": "\f"}
_HEX4 = re.compile(r"[0-9a-fA-F]{4}")


@dataclass(frozen=True)
class Token:
    kind: str
    value: object
    line: int
    column: int
    text: str = ""

    def is_kw(self, *names: str) -> bool:
        return self.kind == KW and self.value in names

    def is_punct(self, *symbols: str) -> bool:
        return self.kind == PUNCT and self.value in symbols

    def describe(self) -> str:
        if self.kind == EOF:
            return "end of input"
        return repr(self.text or str(self.value))


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens, ending with an EOF token.

    Keywords are recognised case-insensitively and normalised to upper
    case; identifiers keep their case.
    """
    tokens: list[Token] = []
    i = 0
    line = 1
    line_start = 0
    n = len(text)
    while i < n:
        ch = text[i]
        col = i - line_start + 1
        if ch == "\n":
            i += 1
            line += 1
            line_start = i
            continue
        if ch in " \t\r":
            i += 1
            continue
        if ch == '"':
            j = i + 1
            chars = []
            while True:
                if j >= n or text[j] == "\n":
                    raise LexError(f"unterminated string starting {text[i:i + 12]!r}", line, col)
                c = text[j]
                if c == "\\" and text[j + 1:j + 2] == "u":
                    m = _HEX4.match(text, j + 2)
                    if m is None:
                        raise LexError(f"bad unicode escape in string {text[i:j + 6]!r}", line, col)
                    chars.append(chr(int(m.group(0), 16)))
                    j += 6
                    continue
                if c == "\\":
                    if j + 1 >= n or text[j + 1] not in _ESCAPES:
                        raise LexError(f"bad escape in string {text[i:j + 2]!r}", line, col)
                    chars.append(_ESCAPES[text[j + 1]])
                    j += 2
                    continue
                if c == '"':
                    break
                chars.append(c)
                j += 1
            tokens.append(Token(STRING, "".join(chars), line, col, text[i:j + 1]))
            i = j + 1
            continue
        if ch.isdigit():
            m = _NUMBER.match(text, i)
            lexeme = m.group(0)
            if m.group(1) or m.group(2):
                tokens.append(Token(FLOAT, float(lexeme), line, col, lexeme))
            else:
                tokens.append(Token(INT, int(lexeme), line, col, lexeme))
            i = m.end()
            continue
        if ch.isalpha() or ch == "_":
            m = _IDENT.match(text, i)
            word = m.group(0)
            upper = word.upper()
            if upper in KEYWORDS:
                tokens.append(Token(KW, upper, line, col, word))
            else:
                tokens.append(Token(IDENT, word, line, col, word))
            i = m.end()
            continue
        two = text[i:i + 2]
        if two in _PUNCT2:
            tokens.append(Token(PUNCT, two, line, col, two))
            i += 2
            continue
        if ch in _PUNCT1:
            tokens.append(Token(PUNCT, ch, line, col, ch))
            i += 1
            continue
        raise LexError(f"illegal character {text[i:i + 10]!r}", line, col)
    tokens.append(Token(EOF, None, line, i - line_start + 1))
    return tokens
