"""Diagnostics shared by the parser, typechecker and calculus."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    span: Span
    message: str
    code: str

    def format(self, filename: str = "<input>") -> str:
        return "%s:%d:%d: %s[%s]: %s" % (
            filename, self.span.line, self.span.column,
            self.severity, self.code, self.message,
        )


def error(span: Span, code: str, message: str) -> Diagnostic:
    return Diagnostic("error", span, message, code)


def warning(span: Span, code: str, message: str) -> Diagnostic:
    return Diagnostic("warning", span, message, code)


class DiagnosticError(Exception):
    """Raised by operations that fail with one or more error diagnostics."""

    def __init__(self, diagnostics, filename: str = "<input>"):
        self.diagnostics = list(diagnostics)
        self.filename = filename
        super().__init__("\n".join(d.format(filename) for d in self.diagnostics))
