# Exception hierarchy shared by the services, the CLI and the HTTP routes.
from __future__ import annotations

from typing import Any, Optional


class SharpConstError(Exception):
    """Base class for errors raised by the numerical services."""


class DomainError(SharpConstError, ValueError):
    """An argument lies outside the domain of an operation."""


class ModelSpecError(SharpConstError):
    """A model spec file does not parse or does not validate."""

    def __init__(self, message: str, *, field: Optional[str] = None, line: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.field = field
        self.line = line

    def __str__(self) -> str:
        where = []
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.field:
            where.append(f"field '{self.field}'")
        return f"{', '.join(where)}: {self.message}" if where else self.message


class ConvergenceError(SharpConstError):
    """A root bracket or an optimisation could not be completed at all."""


class SharpnessViolation(SharpConstError):
    """An empirical scan exceeded a computed sharp constant."""

    def __init__(self, message: str, witness: Any = None):
        super().__init__(message)
        self.witness = witness
