"""Tokenizer for RCL documents and formulas.

Identifiers may end in primes (``x'``, ``x''``).  ``in`` is a keyword (both
the membership operator and the quantifier domain separator); the io prefix
form ``in.name`` / ``out.name`` is recognised by the parser from the keyword
followed directly by a dot.  Slash paths (``pkg/Msg``) are single tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

from .diagnostics import Diagnostic, DiagnosticError, Span, error

KEYWORDS = {
    "context", "node", "inputs", "outputs", "topics", "matches",
    "assume", "guarantee", "forall", "exists", "and", "or", "not", "in",
    "TRUE", "FALSE", "REAL", "NATURAL", "BOOL",
}

# longest first so that e.g. '-->' wins over '->'
SYMBOLS = [
    "-->", "<->", "->", "==", "!=", "<=", ">=",
    "{", "}", "(", ")", ",", ";", ":", "|", "<", ">", "=", "+", "!", ".",
]


@dataclass(frozen=True)
class Token:
    kind: str   # IDENT PATH NUMBER KEYWORD symbol-text EOF
    text: str
    span: Span


def _ident_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _ident_char(c: str) -> bool:
    return c.isalnum() or c in "_'"


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def span(length: int) -> Span:
        return Span(line, col, length)

    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if _ident_start(c):
            j = i
            while j < n and _ident_char(source[j]):
                j += 1
            text = source[i:j]
            # slash paths: pkg/sub/Msg -- only in topic positions, never in formulas
            if j < n and source[j] == "/" and j + 1 < n and _ident_start(source[j + 1]):
                k = j
                while k < n and source[k] == "/" and k + 1 < n and _ident_start(source[k + 1]):
                    k += 1
                    while k < n and _ident_char(source[k]):
                        k += 1
                text = source[i:k]
                tokens.append(Token("PATH", text, span(len(text))))
                col += k - i
                i = k
                continue
            kind = "KEYWORD" if text in KEYWORDS else "IDENT"
            tokens.append(Token(kind, text, span(len(text))))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == "." and j + 1 < n and source[j + 1].isdigit():
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            text = source[i:j]
            tokens.append(Token("NUMBER", text, span(len(text))))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token(sym, sym, span(len(sym))))
                col += len(sym)
                i += len(sym)
                break
        else:
            raise DiagnosticError([
                error(span(1), "P001", f"unexpected character {c!r}")
            ])
    tokens.append(Token("EOF", "", Span(line, col, 0)))
    return tokens
