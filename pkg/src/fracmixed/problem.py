"""Problem data: the fractional order, non-local coefficients and characteristic data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from fracmixed.errors import DegenerateCoefficients, ValidationError
from fracmixed.exprlang import Expression

Fn = Callable[[Any], Any]


@dataclass(frozen=True)
class FunctionData:
    """A function together with its derivative, both vectorized."""

    value: Fn
    deriv: Fn
    source: str = "<callable>"

    def __call__(self, t: Any) -> Any:
        return self.value(t)

    @classmethod
    def from_expression(cls, src: str, variable: str = "t") -> FunctionData:
        e = Expression(src, variable)
        return cls(e, e.derivative(), source=str(src))

    @classmethod
    def constant(cls, c: float) -> FunctionData:
        return cls(
            lambda t: np.full(np.shape(t), float(c)) if np.ndim(t) else float(c),
            lambda t: np.zeros(np.shape(t)) if np.ndim(t) else 0.0,
            source=repr(float(c)),
        )

    @classmethod
    def from_table(cls, x: Any, values: Any, derivs: Any, source: str = "<table>") -> FunctionData:
        """Hermite interpolant of tabulated values and derivatives."""
        x = np.asarray(x, float)
        if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
            raise ValidationError("table abscissae must be strictly increasing", stage="problem")
        spline = CubicHermiteSpline(x, np.asarray(values, float), np.asarray(derivs, float))
        dspline = spline.derivative()

        def value(t: Any) -> Any:
            out = spline(t)
            return float(out) if np.ndim(out) == 0 else out

        def deriv(t: Any) -> Any:
            out = dspline(t)
            return float(out) if np.ndim(out) == 0 else out

        return cls(value, deriv, source=source)

    def __add__(self, other: FunctionData) -> FunctionData:
        return FunctionData(
            lambda t: self.value(t) + other.value(t),
            lambda t: self.deriv(t) + other.deriv(t),
            source=f"({self.source})+({other.source})",
        )


def as_function(f: FunctionData | str | float, variable: str = "t") -> FunctionData:
    if isinstance(f, FunctionData):
        return f
    if isinstance(f, str):
        return FunctionData.from_expression(f, variable)
    return FunctionData.constant(float(f))


@dataclass(frozen=True)
class ProblemSpec:
    """Data of the mixed problem.

    ``a1, a2, a3`` live on ``[0, 1/2]`` (non-local condition), ``phi1`` on
    ``[1/2, 1]`` (data on the characteristic ``y = x - 1``) and ``phi2`` on
    ``[0, 1/2]`` (data on the characteristic ``x = 1 + y``).
    """

    lam: float
    a1: FunctionData
    a2: FunctionData
    a3: FunctionData
    phi1: FunctionData
    phi2: FunctionData

    @classmethod
    def from_expressions(
        cls, lam: float, a1: Any, a2: Any, a3: Any, phi1: Any, phi2: Any
    ) -> ProblemSpec:
        return cls(
            lam=float(lam),
            a1=as_function(a1, "t"),
            a2=as_function(a2, "t"),
            a3=as_function(a3, "t"),
            phi1=as_function(phi1, "x"),
            phi2=as_function(phi2, "y"),
        )

    def validate(self, samples: int = 1001, corner_tol: float = 1e-10) -> ProblemSpec:
        if not (0 < self.lam <= 1):
            raise ValidationError(f"lambda must lie in (0, 1], got {self.lam!r}", stage="problem")
        t = np.linspace(0.0, 0.5, samples)
        x = np.linspace(0.5, 1.0, samples)
        try:
            vals = {
                "a1": self.a1(t), "a2": self.a2(t), "a3": self.a3(t),
                "a1'": self.a1.deriv(t), "a2'": self.a2.deriv(t), "a3'": self.a3.deriv(t),
                "phi1": self.phi1(x), "phi1'": self.phi1.deriv(x),
                "phi2": self.phi2(t), "phi2'": self.phi2.deriv(t),
            }
        except ValidationError as exc:
            raise DegenerateCoefficients(f"data cannot be evaluated: {exc}", stage="problem") from exc
        for name, v in vals.items():
            if not np.all(np.isfinite(v)):
                raise ValidationError(f"{name} is not finite on its interval", stage="problem")
        a1 = np.asarray(vals["a1"])
        scale = max(1.0, float(np.max(np.abs(a1))))
        if np.any(np.abs(a1) <= 1e-12 * scale) or np.any(np.sign(a1) != np.sign(a1[0])):
            raise DegenerateCoefficients("a1 vanishes on [0, 1/2]", stage="problem")
        if abs(self.a1(0.0) + self.a2(0.0)) <= 1e-12 * scale:
            raise DegenerateCoefficients("a1(0) + a2(0) = 0", stage="problem")
        gap = abs(self.phi1(1.0) - self.phi2(0.0))
        if gap > corner_tol * max(1.0, abs(self.phi1(1.0))):
            raise ValidationError(f"corner compatibility phi1(1) = phi2(0) violated by {gap:.3e}", stage="problem")
        return self

    @property
    def tau1_left(self) -> float:
        """Corner value u(0, 0) forced by the non-local condition at t = 0."""
        return float(self.a3(0.0) / (self.a1(0.0) + self.a2(0.0)))

    def __add__(self, other: ProblemSpec) -> ProblemSpec:
        """Superpose ``a3``, ``phi1`` and ``phi2``; the problem is linear in these only,
        so ``lam``, ``a1`` and ``a2`` must be shared."""
        if self.lam != other.lam:
            raise ValidationError("cannot add problems with different lambda", stage="problem")
        for name in ("a1", "a2"):
            f, g = getattr(self, name), getattr(other, name)
            if f is not g and (f.source != g.source or f.source == "<callable>"):
                raise ValidationError(f"cannot add problems with different {name}", stage="problem")
        return ProblemSpec(
            self.lam,
            self.a1,
            self.a2,
            self.a3 + other.a3,
            self.phi1 + other.phi1,
            self.phi2 + other.phi2,
        )


def constant_problem(lam: float, c: float = 1.0) -> ProblemSpec:
    """Data whose exact solution is ``u = c``."""
    return ProblemSpec.from_expressions(lam, "2", "1", repr(3.0 * c), repr(float(c)), repr(float(c)))


def linear_problem(lam: float) -> ProblemSpec:
    """Data whose exact solution is ``u = x``."""
    return ProblemSpec.from_expressions(lam, "1", "1", "0", "x", "1+y")


def generic_problem(lam: float) -> ProblemSpec:
    """Smooth data without a closed-form solution."""
    return ProblemSpec.from_expressions(lam, "2+t", "1", "sin(t)", "x^2", "1+y^2")
