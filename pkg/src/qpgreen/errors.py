"""Exception types shared across the package."""


class QPGreenError(Exception):
    """Base class for all package errors."""


class DomainError(QPGreenError, ValueError):
    """Input outside the domain of an operation."""


class ConfigError(QPGreenError, ValueError):
    """Invalid run configuration (CLI exit code 2)."""


class SingularInputError(QPGreenError, ValueError):
    """Input at a singular point: lattice point, grazing order, in-plane dual (exit code 4)."""


class ToleranceError(QPGreenError, ArithmeticError):
    """A numerical check did not meet its tolerance (exit code 3)."""


class OverflowReport(QPGreenError, OverflowError):
    """An intermediate quantity would exceed the double-precision range."""

    def __init__(self, message: str, threshold: float | None = None):
        super().__init__(message)
        self.threshold = threshold
