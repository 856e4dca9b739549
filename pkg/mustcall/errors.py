"""
Exception hierarchy for the must-call checker.
Every error can carry the source span it was raised for.
"""

from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from mustcall.frontend.ast_nodes import Span


class MustCallError(ValueError):
    """Base class for all checker errors."""

    def __init__(self, message: str, span: Optional["Span"] = None):
        super().__init__(message)
        self.message = message
        self.span = span

    def __str__(self) -> str:
        if self.span is None:
            return self.message
        return f"{self.span}: {self.message}"


class LexError(MustCallError):
    """Unrecognized character in MiniOO source."""


class ParseError(MustCallError):
    """Syntax or attribute error; parsing stops at the first one."""


class ResolutionError(MustCallError):
    """Name, type or call resolution failure while building the model."""


class OverlayError(MustCallError):
    """Malformed or unbindable overlay annotation entry."""

    def __init__(
        self, message: str, span: Optional["Span"] = None, line_no: Optional[int] = None
    ):
        super().__init__(message, span)
        self.line_no = line_no

    def __str__(self) -> str:
        if self.line_no is not None and self.span is None:
            return f"overlay line {self.line_no}: {self.message}"
        return super().__str__()


class ContractViolation(MustCallError):
    """An operation was called outside its precondition."""
