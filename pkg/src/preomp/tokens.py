"""Tokenizer for the supported C subset.

Preprocessor lines are captured whole: lines introducing a parallelisation
directive get their own token kind, everything else (#include, #define,
foreign pragmas) stays opaque and is passed through verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .diagnostics import ParseError

KEYWORDS = frozenset({"int", "long", "double", "void", "for", "if", "else", "while", "return"})

TYPE_NAMES = frozenset({"int", "long", "double"})

# Longest-match-first punctuation table.
_PUNCT = (
    "<<=", ">>=",
    "==", "!=", "<=", ">=", "&&", "||", "++", "--",
    "+=", "-=", "*=", "/=", "%=",
    "(", ")", "{", "}", "[", "]", ";", ",",
    "<", ">", "=", "+", "-", "*", "/", "%", "!",
)

_DIRECTIVE_RE = re.compile(r"#\s*pragma\s+preomp\b")
_IDENT_RE = re.compile(r"[A-Za-z_]\w*")
_NUM_RE = re.compile(r"(\d+\.\d*([eE][-+]?\d+)?|\.\d+([eE][-+]?\d+)?|\d+[eE][-+]?\d+|\d+)")


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "keyword" | "int" | "float" | "punct" | "directive" | "preproc" | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)

    def advance(text):
        nonlocal i, line, col
        for ch in text:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += len(text)

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            continue
        if source.startswith("//", i):
            end = source.find("\n", i)
            end = n if end < 0 else end
            advance(source[i:end])
            continue
        if source.startswith("/*", i):
            end = source.find("*/", i + 2)
            if end < 0:
                raise ParseError("unterminated comment", line, col)
            advance(source[i:end + 2])
            continue
        if ch == "#" and col == _line_start_col(source, i):
            end = source.find("\n", i)
            end = n if end < 0 else end
            text = source[i:end].rstrip()
            kind = "directive" if _DIRECTIVE_RE.match(text) else "preproc"
            if kind == "directive":
                text = " ".join(text.split())
            tokens.append(Token(kind, text, line, col))
            advance(source[i:end])
            continue
        m = _IDENT_RE.match(source, i)
        if m:
            text = m.group()
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, line, col))
            advance(text)
            continue
        m = _NUM_RE.match(source, i)
        if m:
            text = m.group()
            kind = "float" if ("." in text or "e" in text or "E" in text) else "int"
            tokens.append(Token(kind, text, line, col))
            advance(text)
            continue
        for p in _PUNCT:
            if source.startswith(p, i):
                tokens.append(Token("punct", p, line, col))
                advance(p)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


def _line_start_col(source: str, i: int) -> int:
    # A '#' opens a preprocessor line only when nothing but whitespace precedes
    # it on that line; the returned column makes that check cheap.
    j = i
    while j > 0 and source[j - 1] != "\n":
        if source[j - 1] not in " \t":
            return -1
        j -= 1
    start = j
    while source[start] in " \t":
        start += 1
    return start - j + 1


def token_equivalent(a: str, b: str) -> bool:
    """True when two sources carry the same token stream (whitespace aside)."""
    ta = [(t.kind, t.text) for t in tokenize(a) if t.kind != "eof"]
    tb = [(t.kind, t.text) for t in tokenize(b) if t.kind != "eof"]
    return ta == tb
