"""Exception hierarchy shared by the solver stages."""

from __future__ import annotations


class FracMixedError(Exception):
    """Base class for all solver errors."""

    def __init__(self, message: str = "", *, stage: str | None = None) -> None:
        super().__init__(message)
        #: pipeline stage that raised the error
        self.stage = stage

    def __str__(self) -> str:
        msg = super().__str__()
        return f"[{self.stage}] {msg}" if self.stage else msg


class ValidationError(FracMixedError):
    """Input data violate a precondition (exit code 2 on the command line)."""


class NumericalError(FracMixedError):
    """A numerical stage failed (exit code 3 on the command line)."""


class NonConvergence(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass


class SingularStep(NumericalError):
    pass


class LinearSolveFailure(NumericalError):
    pass


class DegenerateGrid(ValidationError):
    pass


class DegenerateTime(ValidationError):
    pass


class DegenerateCoefficients(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass
