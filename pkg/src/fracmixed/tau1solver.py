"""Initial trace ``tau1 = u(x, 0)`` from the constant-coefficient two-point problem

    tau1'' + c tau1' = c phi1'((x + 1) / 2),   tau1(0) = a3(0) / (a1(0) + a2(0)),   tau1(1) = phi1(1).

The solution is written through ``v = tau1'``:
``v(x) = kappa e^{-c x} + J(x)`` with ``J(x) = c int_0^x e^{-c (x - t)} g(t) dt``,
so only one-dimensional quadrature of smooth data is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma

from fracmixed.errors import DegenerateCoefficients, DegenerateGrid, QuadratureFailure
from fracmixed.problem import ProblemSpec


@dataclass(frozen=True)
class Tau1Config:
    """:arg gamma_factor_enabled: couple with ``c = Gamma(lam)``; otherwise ``c = 1``."""

    lam: float
    n: int = 256
    quad_tol: float = 1e-12
    gauss_nodes: int = 12
    gamma_factor_enabled: bool = True

    @property
    def c(self) -> float:
        return float(gamma(self.lam)) if self.gamma_factor_enabled else 1.0

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)


@dataclass(frozen=True)
class Tau1Solution:
    x: np.ndarray
    tau: np.ndarray
    dtau: np.ndarray
    c: float
    kappa: float
    quad_error: float = field(default=0.0)


def _cell_integrals(g, x: np.ndarray, c: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell integrals of c e^{-c (b - t)} g(t) and g(t) (1 - e^{-c (b - t)})."""
    t, w = np.polynomial.legendre.leggauss(nodes)
    a, b = x[:-1, None], x[1:, None]
    half = 0.5 * (b - a)
    tt = a + half * (1.0 + t)
    gv = np.asarray(g(tt), float)
    decay = np.exp(-c * (b - tt))
    j_inc = c * np.sum(w * decay * gv, axis=1) * half[:, 0]
    i_inc = np.sum(w * (1.0 - decay) * gv, axis=1) * half[:, 0]
    return j_inc, i_inc


def _particular(g, x: np.ndarray, c: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """``J`` and its running integral at the points ``x`` (starting at 0)."""
    j_inc, i_inc = _cell_integrals(g, x, c, nodes)
    dx = np.diff(x)
    e = np.exp(-c * dx)
    m = (1.0 - e) / c
    J = np.zeros_like(x)
    IJ = np.zeros_like(x)
    for i in range(dx.size):
        J[i + 1] = e[i] * J[i] + j_inc[i]
        IJ[i + 1] = IJ[i] + J[i] * m[i] + i_inc[i]
    return J, IJ


def solve_tau1(spec: ProblemSpec, cfg: Tau1Config, x: np.ndarray | None = None) -> Tau1Solution:
    """Solve for ``tau1`` and ``tau1'`` at the points ``x`` (default: the config grid)."""
    denom = spec.a1(0.0) + spec.a2(0.0)
    if abs(denom) <= 1e-14 * max(1.0, abs(spec.a1(0.0))):
        raise DegenerateCoefficients("a1(0) + a2(0) vanishes", stage="tau1solver")
    x = cfg.grid if x is None else np.asarray(x, float)
    if x.ndim != 1 or x.size < 2 or x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
        raise DegenerateGrid("tau1 points must increase from 0 to 1", stage="tau1solver")

    c = cfg.c
    left = spec.a3(0.0) / denom
    right = spec.phi1(1.0)

    def g(t):
        return spec.phi1.deriv(0.5 * (np.asarray(t) + 1.0))

    J, IJ = _particular(g, x, c, cfg.gauss_nodes)
    # accuracy estimate from a half-order rule
    Jc, IJc = _particular(g, x, c, max(2, cfg.gauss_nodes // 2))
    err = float(max(np.max(np.abs(J - Jc)), np.max(np.abs(IJ - IJc))))
    if err > cfg.quad_tol * max(1.0, float(np.max(np.abs(J)))):
        raise QuadratureFailure(
            f"tau1 quadrature error estimate {err:.3e} exceeds {cfg.quad_tol:.1e}; refine the grid",
            stage="tau1solver",
        )

    ramp = -np.expm1(-c * x) / c
    kappa = (right - left - IJ[-1]) / ramp[-1]
    tau = left + kappa * ramp + IJ
    dtau = kappa * np.exp(-c * x) + J
    tau[-1] = right
    return Tau1Solution(x=x, tau=tau, dtau=dtau, c=c, kappa=float(kappa), quad_error=err)


def tau1_residual(
    tau: np.ndarray, spec: ProblemSpec, cfg: Tau1Config
) -> tuple[float, tuple[float, float]]:
    """Max-norm second-difference ODE residual and the two endpoint mismatches."""
    tau = np.asarray(tau, float)
    x = np.linspace(0.0, 1.0, tau.size)
    h = x[1] - x[0]
    c = cfg.c
    d2 = (tau[2:] - 2 * tau[1:-1] + tau[:-2]) / h**2
    d1 = (tau[2:] - tau[:-2]) / (2 * h)
    rhs = c * spec.phi1.deriv(0.5 * (x[1:-1] + 1.0))
    ode = float(np.max(np.abs(d2 + c * d1 - rhs))) if tau.size > 2 else 0.0
    bc0 = abs(tau[0] - spec.tau1_left)
    bc1 = abs(tau[-1] - spec.phi1(1.0))
    return ode, (float(bc0), float(bc1))
