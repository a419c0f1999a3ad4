"""Shared validation-report machinery for meshes, parameters and states."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Violation:
    """One violated invariant, with enough context to locate it."""

    code: str
    message: str
    indices: tuple = ()

    def __str__(self) -> str:
        if self.indices:
            return f"{self.code}: {self.message} (indices: {list(self.indices)[:8]}{'...' if len(self.indices) > 8 else ''})"
        return f"{self.code}: {self.message}"


@dataclass
class ValidationReport:
    """Collection of violations; empty means everything checked out."""

    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, message: str, indices=()) -> None:
        self.violations.append(Violation(code, message, tuple(indices)))

    def messages(self) -> list[str]:
        return [str(v) for v in self.violations]

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "; ".join(self.messages())


class ConfigError(ValueError):
    """Raised for malformed or inadmissible configuration input."""

    def __init__(self, message: str, errors: list[str] | None = None):
        super().__init__(message)
        self.errors = errors if errors is not None else [message]


class SolverError(RuntimeError):
    """Raised when a linear or nonlinear solve fails to converge."""

    def __init__(self, message: str, residual: float | None = None, iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
