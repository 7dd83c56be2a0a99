"""Diagnostics shared by every stage of the kernel."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

# Stable diagnostic codes. Every checker error maps to exactly one of these.
CODES = frozenset(
    {
        "syntax-error",
        "unbound-identifier",
        "duplicate-name",
        "type-mismatch",
        "not-a-type",
        "not-a-function",
        "not-a-program",
        "ill-formed-motive",
        "unresolved-hole",
        "not-fully-applied",
        "non-exhaustive-match",
        "location-in-source",
        "linear-unused",
        "linear-duplicated",
        "constraint-violation",
        "relevance-violation",
        "undefined-merge",
        "name-not-found",
        "nonlinear-field-in-U-type",
        "negative-occurrence",
        "non-structural-recursion",
        "all-instances-pruned",
        "fuel-exhausted",
        "stuck-term",
        "dangling-location",
        "unresolvable",
        "file-not-found",
        "usage",
    }
)


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int = 0
    col: int = 0
    file: str | None = None

    def __str__(self) -> str:
        where = self.file or "<input>"
        return f"{where}:{self.line}:{self.col}"


class TLLError(Exception):
    """Base error; ``code`` is one of :data:`CODES`."""

    def __init__(
        self,
        code: str,
        message: str,
        span: Span | None = None,
        context: str | None = None,
    ):
        assert code in CODES, code
        super().__init__(message)
        self.code = code
        self.message = message
        self.span = span
        self.context = context

    def __str__(self) -> str:
        loc = f"{self.span}: " if self.span else ""
        return f"{loc}[{self.code}] {self.message}"

    def to_diagnostic(self, severity: str = "error") -> Diagnostic:
        return Diagnostic(severity, self.code, self.message, self.span, self.context)


class ParseError(TLLError):
    pass


class TypingError(TLLError):
    pass


class LinearityError(TypingError):
    pass


class FuelExhausted(TLLError):
    def __init__(self, message: str = "reduction fuel exhausted"):
        super().__init__("fuel-exhausted", message)


class EvalError(TLLError):
    pass


@dataclass
class Diagnostic:
    severity: str
    code: str
    message: str
    span: Span | None = None
    context: str | None = field(default=None)

    def render(self) -> str:
        loc = f"{self.span}: " if self.span else ""
        text = f"{loc}{self.severity}[{self.code}]: {self.message}"
        if self.context:
            text += "\n  " + self.context.replace("\n", "\n  ")
        return text

    def to_json(self) -> dict[str, Any]:
        span = None
        if self.span is not None:
            span = {
                "file": self.span.file,
                "line": self.span.line,
                "col": self.span.col,
                "start": self.span.start,
                "end": self.span.end,
            }
        return {
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
            "span": span,
            "context": self.context,
        }
