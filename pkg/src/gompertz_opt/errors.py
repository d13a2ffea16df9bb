"""Exception hierarchy shared by the solvers, simulator and CLI."""

from __future__ import annotations


class ModelError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ModelError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigError(ModelError):
    """Malformed configuration file or flag. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConditionError(ModelError):
    """A well-posedness condition failed. ``report`` holds the evaluated conditions."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class QuadratureError(ModelError):
    pass


class IncompleteGammaError(ModelError):
    pass


class BracketBreach(ModelError):
    """Trial value lies off the solution manifold of the reduced HJB equation.

    ``side`` is ``"low"`` when u < c0(m) and ``"high"`` when the slope
    equation has no nonnegative root.
    """

    def __init__(self, message: str, side: str):
        super().__init__(message)
        self.side = side


class ConvergenceError(ModelError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = trace or []


class ExtrapolationError(ModelError, ValueError):
    pass


class IntegrationError(ModelError):
    def __init__(self, message: str, last_good: float | None = None):
        super().__init__(message)
        self.last_good = last_good


class InsufficientDataError(ModelError):
    pass


class InfeasibleError(ModelError):
    def __init__(self, message: str, margins=None):
        super().__init__(message)
        self.margins = margins or []


class DataFormatError(ModelError, ValueError):
    """Malformed data file. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
