"""Exceptions raised by timescale_sir.

Every error derives from TimescaleSirError and from the builtin that best
describes it, so callers can keep catching ValueError / ArithmeticError.
"""
from typing import Optional


class TimescaleSirError(Exception):
    """Base class for all errors raised by the package."""


class TimeScaleError(TimescaleSirError, ValueError):
    """Invalid time scale or a query outside of it."""


class EmptyDomainError(TimeScaleError):
    pass


class InvalidEndpointError(TimeScaleError):
    pass


class AccumulationPointError(TimeScaleError):
    pass


class NotInDomainError(TimeScaleError):
    def __init__(self, t: float, message: Optional[str] = None):
        self.t = t
        super().__init__(message or f"Time {t!r} is not in the time scale")


class WrongDomainError(TimeScaleError):
    pass


class CoefficientError(TimescaleSirError, ValueError):
    """Bad coefficient literal or a coefficient unusable on the working grid."""


class NonRegressiveError(TimescaleSirError, ArithmeticError):
    """1 + mu(t) p(t) vanished (or became nonpositive where positivity is required)."""

    def __init__(self, message: str, witness_t: Optional[float] = None):
        self.witness_t = witness_t
        if witness_t is not None:
            message = f"{message} (witness t={witness_t!r})"
        super().__init__(message)


class ExponentialOverflowError(TimescaleSirError, OverflowError):
    pass


class InvalidInitialStateError(TimescaleSirError, ValueError):
    pass


class DegenerateStateError(TimescaleSirError, ArithmeticError):
    pass


class ConservationError(TimescaleSirError, ArithmeticError):
    pass


class ScenarioParseError(TimescaleSirError, ValueError):
    """Syntax error in a scenario file, anchored at a line and column (1-based)."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line = line
        self.column = column
        self.reason = message
        super().__init__(f"line {line}, column {column}: {message}")


class ScenarioValidationError(TimescaleSirError, ValueError):
    """Semantically invalid scenario field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
