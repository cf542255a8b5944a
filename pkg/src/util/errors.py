from typing import Optional, Sequence


class ShiftRiskException(Exception):
    """
    Base exception for the library. Carries a human readable detail and the
    process exit code the CLI reports when the exception escapes a command.
    """

    exit_code: int = 3

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code
        super().__init__(detail)


class DomainError(ShiftRiskException, ValueError):
    """A parameter lies outside the domain of the operation."""

    exit_code = 2


class ShapeError(DomainError):
    """Array shapes or dimensions do not agree."""


class UnsupportedOperationError(ShiftRiskException, TypeError):
    """The operation is not defined for the given variant."""


class NumericalError(ShiftRiskException, ArithmeticError):
    """Quadrature, factorization or Monte Carlo evaluation failed."""

    exit_code = 3


class CellError(NumericalError):
    """
    Exception raised when one (estimator, perturbation) cell of a risk matrix fails.
    """

    def __init__(self, estimator_index: int, perturbation_index: int, cause: Exception):
        self.estimator_index = estimator_index
        self.perturbation_index = perturbation_index
        self.cause = cause
        super().__init__(
            f"cell (estimator={estimator_index}, perturbation={perturbation_index}) failed: {cause}"
        )

    def __reduce__(self):
        return (type(self), (self.estimator_index, self.perturbation_index, self.cause))


class CertificationError(NumericalError):
    """The certified W2 bound of a density pair exceeds the requested budget."""

    def __init__(self, detail: str, realized: float):
        self.realized = realized
        super().__init__(detail)

    def __reduce__(self):
        return (type(self), (self.detail, self.realized))


class ConfigError(DomainError):
    """
    Exception raised when an experiment config cannot be loaded or validated.
    """

    def __init__(self, detail: str, fields: Sequence[str] = ()):
        self.fields = list(fields)
        super().__init__(detail)

    def __reduce__(self):
        return (type(self), (self.detail, self.fields))


class CheckFailure(ShiftRiskException):
    """One or more verification checks failed."""

    exit_code = 1

    def __init__(self, failed: Sequence[str]):
        self.failed = list(failed)
        super().__init__("failed checks: " + ", ".join(self.failed))

    def __reduce__(self):
        return (type(self), (self.failed,))
