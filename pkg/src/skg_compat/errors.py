"""Custom exceptions for skg_compat."""

from __future__ import annotations

from typing import Optional


class SkgError(ValueError):
    """Base class for every error raised by skg_compat."""


class SkgFormatError(SkgError):
    """Raised when an SKG JSON document is malformed.

    Examples:
    - JSON syntax errors (line and column are reported).
    - Missing or mistyped keys.
    - Unknown keys in strict mode.
    """

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None) -> None:
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class DuplicateIdError(SkgFormatError):
    """Raised when an etype or object property id is defined twice."""

    def __init__(self, ref: str, kind: str) -> None:
        super().__init__(f"Duplicate {kind} id '{ref}'.")
        self.ref = ref


class UnresolvedReferenceError(SkgFormatError):
    """Raised when a reference names an id that is not defined."""

    def __init__(self, ref: str, where: str) -> None:
        super().__init__(f"Unresolved reference '{ref}' in {where}.")
        self.ref = ref


class SkgValidationError(SkgError):
    """Raised when an operation needs a valid Skg but got an invalid one."""

    def __init__(self, message: str, report=None) -> None:
        super().__init__(message)
        self.report = report


class TurtleSyntaxError(SkgError):
    """Raised on lexical errors, undeclared prefixes or unterminated brackets."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class LoweringError(SkgError):
    """Raised when a Turtle document cannot be lowered to an Skg.

    Examples:
    - Restriction blank node without owl:onProperty.
    - Restriction filler that is not a named class.
    - Unsupported construct while lowering in strict mode.
    """


class ConfigurationError(SkgError):
    """Raised when a similarity, run or synthetic configuration is invalid."""


class MappingError(SkgError):
    """Raised when an equivalence mapping does not mention a compared etype."""
