"""Exception hierarchy.

Two families are distinguished because the command line maps them to
different exit codes: bad input (``ValidationError``) and failures of a
numerical procedure on otherwise valid input (``NumericalError``).
"""

from __future__ import annotations


class QnonlinError(Exception):
    """Base class for all package errors."""

    def to_dict(self) -> dict:
        body = {"error": type(self).__name__, "message": str(self)}
        body.update(getattr(self, "details", {}))
        return body


class ValidationError(QnonlinError, ValueError):
    """Input does not satisfy a documented precondition."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class DimensionMismatchError(ValidationError):
    def __init__(self, message: str, expected=None, actual=None):
        super().__init__(message, expected=expected, actual=actual)
        self.expected = expected
        self.actual = actual


class NotHermitianError(ValidationError):
    def __init__(self, defect: float):
        super().__init__(f"matrix is not hermitian (||M - M^H||_F = {defect:.3e})", defect=defect)
        self.defect = defect


class StateValidationError(ValidationError):
    """A matrix failed one or more density-matrix checks.

    ``violations`` maps the failed check (``hermiticity``, ``trace``,
    ``positivity``) to the offending magnitude.
    """

    def __init__(self, violations: dict[str, float]):
        parts = ", ".join(f"{k}: {v:.6g}" for k, v in violations.items())
        super().__init__(f"invalid density matrix ({parts})", violations=violations)
        self.violations = violations


class BudgetExceededError(ValidationError):
    def __init__(self, dim: int, max_dim: int, hint: str = ""):
        msg = f"operator dimension {dim} exceeds budget {max_dim}"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg, dim=dim, max_dim=max_dim)
        self.dim = dim
        self.max_dim = max_dim


class TrivialMapError(ValidationError):
    pass


class NumericalError(QnonlinError, ArithmeticError):
    """A numerical procedure could not produce a valid result."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class NotCPError(NumericalError):
    def __init__(self, lambda_min: float, message: str | None = None):
        super().__init__(
            message or f"map is not completely positive (min Choi eigenvalue {lambda_min:.6g})",
            lambda_min=lambda_min,
        )
        self.lambda_min = lambda_min


class NegativityError(NumericalError):
    def __init__(self, value: float):
        super().__init__(f"matrix has negative eigenvalue {value:.6g}", value=value)
        self.value = value


class ConvergenceError(NumericalError):
    def __init__(self, message: str, residual: float):
        super().__init__(message, residual=residual)
        self.residual = residual


class IllConditionedError(NumericalError):
    pass


class NotTraceNonincreasingError(NumericalError):
    def __init__(self, excess: float):
        super().__init__(
            f"sum of V_i^H V_i exceeds identity by {excess:.6g}", excess=excess
        )
        self.excess = excess
