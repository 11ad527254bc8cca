"""Second-kind Volterra system for the boundary slopes ``mu2 = tau2'`` and ``mu3 = tau3'``.

The fluxes ``nu2 = u_x(0, y)`` and ``nu3 = u_x(1, y)`` of the parabolic
solution are

    nu2 = -K1 * mu2 + K2 * mu3 + F0[tau1],
    nu3 = -K2 * mu2 + K1 * mu3 + F1[tau1],

(``*`` is the Volterra convolution on [0, y]).  Equating them with the
relations coming from the hyperbolic side, ``nu2 = mu2 + R`` and
``nu3 = -mu3 + phi2'(y/2)``, gives

    mu2 + K1 * mu2 - K2 * mu3 = F0 - R = f1,
    mu3 + K1 * mu3 - K2 * mu2 = phi2'(y/2) - F1 = f2.

Unknowns live at cell midpoints ``t_n = (n + 1/2) h``.  The singular part
``(y - y1)^-rho / Gamma(1 - rho)`` of ``K1`` is integrated exactly against the
piecewise-constant density, the smooth parts by the midpoint rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import rgamma

from fracmixed.errors import DegenerateCoefficients, SingularStep
from fracmixed.greens import KernelCache, cell_weights, kernel_K1_smooth, kernel_K2, trace_functionals
from fracmixed.hyperbolic import TraceTable
from fracmixed.problem import ProblemSpec


@dataclass(frozen=True)
class KernelTables:
    """Lag tables: entry ``l`` weights the cell ``l`` steps behind the collocation point."""

    h: float
    rho: float
    singular: np.ndarray
    k1_smooth: np.ndarray
    k2: np.ndarray

    @property
    def diag(self) -> np.ndarray:
        """Total weight of ``K1`` (singular plus smooth) per lag."""
        return self.singular + self.k1_smooth


def kernel_tables(cache: KernelCache, n: int) -> KernelTables:
    h = 1.0 / n
    rho = cache.rho
    lag = np.arange(n, dtype=float)
    # exact singular weights on cell [t - (l + 1/2) h, t - (l - 1/2) h]
    far = ((lag + 0.5) * h) ** (1.0 - rho)
    near = (np.maximum(lag - 0.5, 0.0) * h) ** (1.0 - rho)
    sing = (far - near) / (1.0 - rho) * rgamma(1.0 - rho)
    s = lag * h
    s[0] = 0.25 * h
    width = np.full(n, h)
    width[0] = 0.5 * h
    k1 = width * kernel_K1_smooth(s, 0.0, cache)
    k2 = width * kernel_K2(s, 0.0, cache)
    return KernelTables(h=h, rho=rho, singular=sing, k1_smooth=k1, k2=k2)


@dataclass
class VolterraSystem:
    n: int
    tables: KernelTables
    f1: np.ndarray
    f2: np.ndarray
    mu2: np.ndarray | None = None
    mu3: np.ndarray | None = None
    step_residual: float = field(default=0.0)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def collocation(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.h


def solve_march(system: VolterraSystem, det_tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """March the 2x2 lower-triangular block system forward in ``y``."""
    n = system.n
    a = system.tables.diag
    b = system.tables.k2
    m2 = np.zeros(n)
    m3 = np.zeros(n)
    d = 1.0 + a[0]
    det = d * d - b[0] * b[0]
    if abs(det) < det_tol:
        raise SingularStep(f"step matrix determinant {det:.3e}; reduce h", stage="volterra")
    worst = 0.0
    for k in range(n):
        hist_a = a[k:0:-1]
        hist_b = b[k:0:-1]
        r1 = system.f1[k] - (hist_a @ m2[:k] - hist_b @ m3[:k])
        r2 = system.f2[k] - (hist_a @ m3[:k] - hist_b @ m2[:k])
        x2 = (d * r1 + b[0] * r2) / det
        x3 = (b[0] * r1 + d * r2) / det
        m2[k], m3[k] = x2, x3
        worst = max(worst, abs(d * x2 - b[0] * x3 - r1), abs(d * x3 - b[0] * x2 - r2))
    system.mu2, system.mu3 = m2, m3
    system.step_residual = worst
    return m2, m3


def convolve_tables(tables: KernelTables, mu2: np.ndarray, mu3: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Discrete ``K1 * mu`` and ``K2 * mu`` sums at the collocation points (dense route)."""
    n = mu2.size
    zeros = np.zeros(n)
    TA = toeplitz(tables.diag[:n], zeros)
    TB = toeplitz(tables.k2[:n], zeros)
    return (TA @ mu2, TA @ mu3), (TB @ mu2, TB @ mu3)


# {{{ right-hand sides


def _ratio_terms(spec: ProblemSpec, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``a2/a1``, ``(a2/a1)'`` and ``(a3/a1)'`` at ``t``."""
    a1, a2, a3 = spec.a1(t), spec.a2(t), spec.a3(t)
    d1, d2, d3 = spec.a1.deriv(t), spec.a2.deriv(t), spec.a3.deriv(t)
    if np.any(np.abs(a1) < 1e-300):
        raise DegenerateCoefficients("a1 vanishes", stage="volterra")
    q = a2 / a1
    dq = (a1 * d2 - d1 * a2) / a1**2
    dr = (a1 * d3 - d1 * a3) / a1**2
    return q, dq, dr


def nonlocal_remainder(
    spec: ProblemSpec, y: np.ndarray, tau1: np.ndarray, dtau1: np.ndarray, tau1_0: float
) -> np.ndarray:
    """``R(y)`` in ``nu2 = tau2' + R``, from differentiating the non-local condition.

    ``tau1`` and ``dtau1`` are the values of ``tau1`` and ``tau1'`` at ``y``.
    ``nu1 = -tau1' + phi1'((y+1)/2)`` is integrated in closed form.
    """
    y = np.asarray(y, float)
    q, dq, dr = _ratio_terms(spec, 0.5 * y)
    phi1 = spec.phi1
    slope_gap = 2.0 * dtau1 - phi1.deriv(0.5 * (y + 1.0))
    int_nu1 = -tau1 + tau1_0 + 2.0 * (phi1(0.5 * (y + 1.0)) - phi1(0.5))
    return q * slope_gap + 0.5 * dq * (tau1_0 + tau1 - int_nu1) - dr


def boundary_fluxes(
    cache: KernelCache, dtau1_nodes: np.ndarray, d2tau1_nodes: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """``F0[tau1](y)`` and ``F1[tau1](y)`` for every ``y`` (initial-trace part of the fluxes)."""
    n = dtau1_nodes.size - 1
    out0 = np.empty(len(y))
    out1 = np.empty(len(y))
    for j, yy in enumerate(y):
        w = cell_weights(cache, float(yy), n)
        out0[j], out1[j] = trace_functionals(dtau1_nodes, d2tau1_nodes, float(yy), cache, w)
    return out0, out1


def rhs_f1(spec: ProblemSpec, y: np.ndarray, flux0: np.ndarray, tau1: np.ndarray, dtau1: np.ndarray, tau1_0: float) -> np.ndarray:
    return flux0 - nonlocal_remainder(spec, y, tau1, dtau1, tau1_0)


def rhs_f2(spec: ProblemSpec, y: np.ndarray, flux1: np.ndarray) -> np.ndarray:
    return spec.phi2.deriv(0.5 * np.asarray(y, float)) - flux1


# }}}


def nodal_from_cells(m: np.ndarray) -> np.ndarray:
    """Node values of a function known at cell midpoints (second order)."""
    out = np.empty(m.size + 1)
    out[1:-1] = 0.5 * (m[1:] + m[:-1])
    if m.size >= 2:
        out[0] = 1.5 * m[0] - 0.5 * m[1]
        out[-1] = 1.5 * m[-1] - 0.5 * m[-2]
    else:
        out[0] = out[-1] = m[0]
    return out


def recover_traces(
    mu2: np.ndarray, mu3: np.ndarray, spec: ProblemSpec, traces: TraceTable
) -> TraceTable:
    """Fill in ``tau2, nu2, tau3, nu3`` on the trace grid from the solved slopes."""
    h = traces.h
    y = traces.grid
    tau2 = traces.tau1[0] + np.concatenate([[0.0], np.cumsum(h * mu2)])
    tau3 = traces.tau1[-1] + np.concatenate([[0.0], np.cumsum(h * mu3)])
    m2 = nodal_from_cells(mu2)
    m3 = nodal_from_cells(mu3)
    nu2 = m2 + nonlocal_remainder(spec, y, traces.tau1, traces.dtau1, float(traces.tau1[0]))
    nu3 = -m3 + spec.phi2.deriv(0.5 * y)
    return traces.with_traces(tau2=tau2, nu2=nu2, tau3=tau3, nu3=nu3, mu2=mu2, mu3=mu3)


# {{{ manufactured problem


def _image_integral(cache: KernelCache, order: int, t: np.ndarray, first: int) -> np.ndarray:
    """``I^order`` of ``2 s^-rho sum_k W(rho, 1-rho; -(first + 2k) s^-rho)`` at ``t``.

    Uses ``I^1[s^(b-1) W(rho, b; -a s^-rho)](t) = t^b W(rho, b+1; -a t^-rho)``.
    """
    rho = cache.rho
    t = np.asarray(t, float)
    W = cache.profile(order + 1.0 - rho)
    scale = t**-rho
    out = np.zeros_like(t)
    a = float(first)
    while True:
        z = -a * scale
        if np.all(z < -cache.z_cutoff):
            break
        out += W(z)
        a += 2.0
    return 2.0 * t ** (order - rho) * out


def manufactured_rhs(cache: KernelCache, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides for which ``mu2 = t`` and ``mu3 = 1`` solve the system exactly."""
    rho = cache.rho
    t = np.asarray(t, float)
    k1_on_t = t ** (2.0 - rho) * rgamma(3.0 - rho) + _image_integral(cache, 2, t, 2)
    k1_on_1 = t ** (1.0 - rho) * rgamma(2.0 - rho) + _image_integral(cache, 1, t, 2)
    k2_on_t = _image_integral(cache, 2, t, 1)
    k2_on_1 = _image_integral(cache, 1, t, 1)
    return t + k1_on_t - k2_on_1, 1.0 + k1_on_1 - k2_on_t


def manufactured_error(cache: KernelCache, n: int) -> float:
    """Relative max error of the march on the manufactured problem with ``n`` steps."""
    system = VolterraSystem(n=n, tables=kernel_tables(cache, n), f1=np.empty(0), f2=np.empty(0))
    t = system.collocation
    system.f1, system.f2 = manufactured_rhs(cache, t)
    m2, m3 = solve_march(system)
    err = max(np.max(np.abs(m2 - t)), np.max(np.abs(m3 - 1.0)))
    return float(err / max(np.max(np.abs(t)), 1.0))


# }}}
