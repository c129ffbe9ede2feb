from __future__ import annotations

from dataclasses import dataclass, asdict

from .syntax import Span


@dataclass(frozen=True)
class Diagnostic:
    span: Span | None
    message: str
    code: str
    severity: str = "error"
    rule: str | None = None
    expected: str | None = None
    actual: str | None = None

    def render(self, path: str = "<input>") -> str:
        where = f"{path}:{self.span}" if self.span else path
        rule = f" [{self.rule}]" if self.rule else ""
        return f"{where}: {self.severity}: {self.code}: {self.message}{rule}"

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.span is not None:
            out["span"] = {"line": self.span.line, "column": self.span.column,
                           "length": self.span.length}
        return out


class FmError(Exception):
    """Base for failures that carry diagnostics."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(d.message for d in diagnostics))

    @property
    def code(self) -> str:
        return self.diagnostics[0].code


class ParseError(FmError):
    pass


class TypeCheckError(FmError):
    pass


class SubtypeFuelExhausted(Exception):
    """The subtyping search ran out of fuel; this is not a negative answer."""
