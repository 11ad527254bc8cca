"""d'Alembert solutions in the three characteristic triangles.

Triangles (vertices):

* ``omega1``: A(0, 0), B(1, 0), C(1/2, -1/2), data ``tau1, nu1`` on AB;
* ``omega2``: A(0, 0), A0(0, 1), D(-1/2, 1/2), data ``tau2, nu2`` on AA0;
* ``omega3``: B(1, 0), B0(1, 1), E(3/2, 1/2), data ``tau3, nu3`` on BB0.

``nu1 = u_y(x, 0)``, ``nu2 = u_x(0, y)`` and ``nu3 = u_x(1, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from fracmixed.errors import OutOfDomain

DOMAINS = ("omega1", "omega2", "omega3")

_DOMAIN_TOL = 1e-12


class PiecewiseLinear:
    """Piecewise-linear interpolant on an increasing grid with exact integrals."""

    def __init__(self, grid: np.ndarray, values: np.ndarray) -> None:
        self.grid = np.asarray(grid, float)
        self.values = np.asarray(values, float)
        seg = 0.5 * np.diff(self.grid) * (self.values[1:] + self.values[:-1])
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])

    def __call__(self, s: Any) -> Any:
        return np.interp(s, self.grid, self.values)

    def antiderivative(self, s: Any) -> Any:
        s = np.asarray(s, float)
        g = self.grid
        k = np.clip(np.searchsorted(g, s, side="right") - 1, 0, g.size - 2)
        out = self._cum[k] + 0.5 * (s - g[k]) * (self.values[k] + self(s))
        return float(out) if out.ndim == 0 else out

    def integral(self, a: Any, b: Any) -> Any:
        return self.antiderivative(b) - self.antiderivative(a)


@dataclass(frozen=True)
class TraceTable:
    """Traces on the three type-change lines, sampled on a uniform grid of step ``h``.

    ``mu2`` and ``mu3`` are the cell-midpoint values of ``tau2'`` and ``tau3'``
    produced by the Volterra march; the nodal arrays are the interpolants used
    by the d'Alembert formulas.
    """

    h: float
    grid: np.ndarray
    tau1: np.ndarray
    dtau1: np.ndarray
    nu1: np.ndarray
    tau2: np.ndarray | None = None
    nu2: np.ndarray | None = None
    tau3: np.ndarray | None = None
    nu3: np.ndarray | None = None
    mu2: np.ndarray | None = None
    mu3: np.ndarray | None = None
    _cache: dict[str, PiecewiseLinear] = field(default_factory=dict, repr=False, compare=False)

    def fn(self, name: str) -> PiecewiseLinear:
        if name not in self._cache:
            vals = getattr(self, name)
            if vals is None:
                raise ValueError(f"trace {name!r} is not available yet")
            self._cache[name] = PiecewiseLinear(self.grid, vals)
        return self._cache[name]

    def with_traces(self, **kw: Any) -> TraceTable:
        return replace(self, _cache={}, **kw)

    def corner_mismatch(self, phi1_at_1: float) -> float:
        vals = [abs(self.tau1[-1] - phi1_at_1)]
        if self.tau2 is not None:
            vals.append(abs(self.tau2[0] - self.tau1[0]))
        if self.tau3 is not None:
            vals.append(abs(self.tau3[0] - self.tau1[-1]))
        return float(max(vals))


def in_domain(domain: str, x: Any, y: Any, tol: float = _DOMAIN_TOL) -> np.ndarray:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if domain == "omega1":
        return (y <= tol) & (x + y >= -tol) & (x - y <= 1 + tol)
    if domain == "omega2":
        return (x <= tol) & (x + y >= -tol) & (y - x <= 1 + tol)
    if domain == "omega3":
        return (x >= 1 - tol) & (y - (x - 1) >= -tol) & (y + (x - 1) <= 1 + tol)
    raise ValueError(f"unknown domain {domain!r}")


def dalembert_eval(domain: str, traces: TraceTable, x: Any, y: Any) -> Any:
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if not np.all(in_domain(domain, x, y)):
        raise OutOfDomain(f"point outside {domain}", stage="hyperbolic")
    if domain == "omega1":
        tau, nu = traces.fn("tau1"), traces.fn("nu1")
        lo, hi = x - y, x + y
        out = 0.5 * (tau(hi) + tau(lo) + nu.integral(lo, hi))
    elif domain == "omega2":
        tau, nu = traces.fn("tau2"), traces.fn("nu2")
        lo, hi = y - x, y + x
        out = 0.5 * (tau(hi) + tau(lo) + nu.integral(lo, hi))
    else:
        tau, nu = traces.fn("tau3"), traces.fn("nu3")
        lo, hi = y - (x - 1.0), y + (x - 1.0)
        out = 0.5 * (tau(hi) + tau(lo) + nu.integral(lo, hi))
    out = np.asarray(out, float)
    return float(out) if out.ndim == 0 else out


def _sample(samples: Any, s: Any) -> Any:
    if callable(samples):
        return samples(s)
    samples = np.asarray(samples, float)
    return np.interp(s, np.linspace(0.0, 1.0, samples.size), samples)


def trace_nu1(tau1_prime: Any, phi1_prime: Callable[[Any], Any], s: Any) -> Any:
    """``nu1(s) = -tau1'(s) + phi1'((s + 1) / 2)`` from the data on CB."""
    return -_sample(tau1_prime, s) + phi1_prime(0.5 * (np.asarray(s, float) + 1.0))


def trace_nu3(tau3_prime: Any, phi2_prime: Callable[[Any], Any], s: Any) -> Any:
    """``nu3(s) = -tau3'(s) + phi2'(s / 2)`` from the data on BE."""
    return -_sample(tau3_prime, s) + phi2_prime(0.5 * np.asarray(s, float))


def char_trace(which: str, traces: TraceTable, t: Any) -> Any:
    """``u(t, -t)`` on AC or ``u(-t, t)`` on AD for ``t`` in [0, 1/2]."""
    t = np.asarray(t, float)
    if np.any(t < -_DOMAIN_TOL) or np.any(t > 0.5 + _DOMAIN_TOL):
        raise OutOfDomain("characteristic parameter must lie in [0, 1/2]", stage="hyperbolic")
    if which == "AC":
        tau, nu = traces.fn("tau1"), traces.fn("nu1")
    elif which == "AD":
        tau, nu = traces.fn("tau2"), traces.fn("nu2")
    else:
        raise ValueError(f"unknown characteristic {which!r}")
    out = 0.5 * (tau(0.0) + tau(2 * t) - nu.integral(0.0, 2 * t))
    return float(out) if np.ndim(out) == 0 else out


def wave_residual(domain: str, traces: TraceTable, x: float, y: float, h_fd: float) -> float:
    """Central-difference ``u_xx - u_yy`` of the d'Alembert solution at ``(x, y)``."""
    pts_x = np.array([x, x + h_fd, x - h_fd, x, x])
    pts_y = np.array([y, y, y, y + h_fd, y - h_fd])
    if not np.all(in_domain(domain, pts_x, pts_y, tol=0.0)):
        raise OutOfDomain("stencil leaves the triangle", stage="hyperbolic")
    u = dalembert_eval(domain, traces, pts_x, pts_y)
    uxx = (u[1] - 2 * u[0] + u[2]) / h_fd**2
    uyy = (u[3] - 2 * u[0] + u[4]) / h_fd**2
    return float(uxx - uyy)
