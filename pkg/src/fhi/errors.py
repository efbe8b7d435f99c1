"""Exception hierarchy shared by every module."""

from __future__ import annotations


class FHIError(Exception):
    """Base class for all library errors."""


class DomainError(FHIError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ContractError(FHIError, ValueError):
    """A caller broke a documented precondition (shape, length, bounds)."""


class AccuracyError(FHIError, ArithmeticError):
    """A numerical method could not reach its advertised accuracy."""


class ConfigError(FHIError, ValueError):
    """A run configuration is malformed or inconsistent."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class BlowUpError(FHIError, ArithmeticError):
    """A computation produced a non-finite or unbounded value.

    ``location`` names the first offending grid position (for the time stepper
    ``step`` and ``node``), ``diagnostic`` carries whatever stability data was
    available when the failure was detected.
    """

    def __init__(self, message: str, *, diagnostic: dict | None = None, **location):
        self.location = location
        self.diagnostic = dict(diagnostic or {})
        where = ", ".join(f"{k}={v}" for k, v in location.items())
        full = f"{message} ({where})" if where else message
        if self.diagnostic:
            full += f"; diagnostic: {self.diagnostic}"
        super().__init__(full)
