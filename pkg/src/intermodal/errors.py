"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class Violation:
    """A single validation finding: machine-readable code plus a message."""

    code: str
    message: str
    path: str = ""

    def __str__(self) -> str:
        where = f" at {self.path}" if self.path else ""
        return f"{self.code}{where}: {self.message}"


class PlannerError(ValueError):
    """Structured error carrying a stable ``code`` and optional details."""

    def __init__(self, code: str, message: str, **details: Any):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.details = details


class InputError(PlannerError):
    """Raised when an input document fails parsing, schema or validation."""

    def __init__(self, code: str, message: str, violations: list[Violation] | None = None):
        super().__init__(code, message)
        self.violations = list(violations or [])


class NumericalBreakdown(PlannerError):
    def __init__(self, message: str, **diagnostics: Any):
        super().__init__("NUMERICAL_BREAKDOWN", message, **diagnostics)
