"""Reference computations that share no kernel code with the Green's-function route.

``fd_first_bvp`` solves ``u_xx = D^lam u`` in the unit square by the implicit L1
scheme in ``y`` (graded towards ``y = 0`` to follow the ``y^lam`` start-up
layer) and second-order central differences in ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import gamma

from fracmixed.errors import LinearSolveFailure, ValidationError
from fracmixed.specfun import mittag_leffler


@dataclass(frozen=True)
class FdConfig:
    """:arg substeps: internal time steps per output interval.
    :arg grading: mesh ``y_j = (j / J)^grading``; 1 is uniform."""

    nx: int
    ny: int
    lam: float
    substeps: int | None = None
    grading: float | None = None

    def __post_init__(self) -> None:
        if self.nx < 3 or self.ny < 3:
            raise ValidationError("FD grid needs at least 3 nodes per direction", stage="oracle")
        if not 0 < self.lam <= 1:
            raise ValidationError("lambda must lie in (0, 1]", stage="oracle")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nx)

    @property
    def y(self) -> np.ndarray:
        """Output heights (uniform)."""
        return np.linspace(0.0, 1.0, self.ny)

    @property
    def steps_per_interval(self) -> int:
        if self.substeps is not None:
            return self.substeps
        # backward Euler (lam = 1) carries no history, so extra steps are cheap
        return 32 if self.lam == 1.0 else 16

    def time_mesh(self) -> np.ndarray:
        """Internal mesh; contains every output height."""
        g = self.grading if self.grading is not None else max(1.0, (2.0 - self.lam) / self.lam)
        r = self.steps_per_interval
        out = self.y
        pieces = [np.zeros(1)]
        for j in range(out.size - 1):
            a, b = out[j], out[j + 1]
            if j == 0:
                s = (np.arange(1, 4 * r + 1) / (4 * r)) ** g
            else:
                s = np.arange(1, r + 1) / r
            pieces.append(a + (b - a) * s)
        return np.concatenate(pieces)


def _as_callable(data: Any) -> Callable[[np.ndarray], np.ndarray]:
    if callable(data):
        return data
    arr = np.asarray(data, float)
    return lambda s: np.interp(s, np.linspace(0.0, 1.0, arr.size), arr)


def fd_first_bvp(tau1: Any, tau2: Any, tau3: Any, cfg: FdConfig) -> np.ndarray:
    """Field ``u[j, i]`` at ``(x_i, y_j)`` on the ``ny x nx`` output grid."""
    f1, f2, f3 = _as_callable(tau1), _as_callable(tau2), _as_callable(tau3)
    x = cfg.x
    hx = x[1] - x[0]
    t = cfg.time_mesh()
    lam = cfg.lam
    m = x.size - 2

    u_prev = np.asarray(f1(x), float).copy()
    dus: list[np.ndarray] = []
    out = [u_prev.copy()]
    yout = cfg.y
    next_out = 1
    c = 1.0 / gamma(2.0 - lam)
    lap = np.zeros((3, m))
    for n in range(1, t.size):
        dt = t[1 : n + 1] - t[:n]
        if lam == 1.0:
            a = np.zeros(n)
            a[-1] = 1.0 / dt[-1]
        else:
            a = c * ((t[n] - t[:n]) ** (1.0 - lam) - (t[n] - t[1 : n + 1]) ** (1.0 - lam)) / dt
        hist = np.zeros(m)
        if n > 1 and lam != 1.0:
            hist = a[:-1] @ np.asarray(dus)[:, 1:-1]
        left, right = float(f2(t[n])), float(f3(t[n]))
        an = a[-1]
        # (an - D2) u = an u_prev - hist, Dirichlet ends moved to the rhs
        lap[0, 1:] = -1.0 / hx**2
        lap[1, :] = an + 2.0 / hx**2
        lap[2, :-1] = -1.0 / hx**2
        rhs = an * u_prev[1:-1] - hist
        rhs[0] += left / hx**2
        rhs[-1] += right / hx**2
        try:
            inner = solve_banded((1, 1), lap, rhs)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - tridiagonal, diagonally dominant
            raise LinearSolveFailure(str(exc), stage="oracle") from exc
        u_new = np.concatenate([[left], inner, [right]])
        dus.append(u_new - u_prev)
        u_prev = u_new
        if next_out < yout.size and abs(t[n] - yout[next_out]) < 1e-14:
            out.append(u_new.copy())
            next_out += 1
    return np.array(out)


def eigen_solution(lam: float, x: Any, y: Any, mode: int = 1) -> np.ndarray:
    """``E_lam(-(k pi)^2 y^lam) sin(k pi x)``: exact for ``tau1 = sin(k pi x)``, zero sides."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    k2 = (mode * np.pi) ** 2
    return mittag_leffler(lam, -k2 * y**lam) * np.sin(mode * np.pi * x)


def heat_series(x: Any, y: Any, coeffs: np.ndarray) -> np.ndarray:
    """Classical (lam = 1) sine series ``sum_k b_k e^{-(k pi)^2 y} sin(k pi x)``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    k = np.arange(1, len(coeffs) + 1)
    return np.sum(
        coeffs * np.exp(-((k * np.pi) ** 2) * y[..., None]) * np.sin(k * np.pi * x[..., None]), axis=-1
    )


@dataclass(frozen=True)
class BoundaryData:
    """Traces of a first boundary problem, each with its derivative."""

    tau1: Callable[[np.ndarray], np.ndarray]
    dtau1: Callable[[np.ndarray], np.ndarray]
    tau2: Callable[[np.ndarray], np.ndarray]
    tau3: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def eigenmode(cls, mode: int = 1) -> BoundaryData:
        k = mode * np.pi
        zero = lambda s: np.zeros_like(np.asarray(s, float))  # noqa: E731
        return cls(lambda s: np.sin(k * np.asarray(s)), lambda s: k * np.cos(k * np.asarray(s)), zero, zero)

    @classmethod
    def constant(cls, c: float = 1.0) -> BoundaryData:
        one = lambda s: np.full_like(np.asarray(s, float), c)  # noqa: E731
        zero = lambda s: np.zeros_like(np.asarray(s, float))  # noqa: E731
        return cls(one, zero, one, one)


def representation_field(data: BoundaryData, lam: float, n: int, y: np.ndarray) -> np.ndarray:
    """Green's-function solution at ``(x_i, y_j)`` with ``x`` the ``n``-cell grid."""
    from fracmixed.greens import KernelCache
    from fracmixed.parabolic import ParabolicField

    x = np.linspace(0.0, 1.0, n + 1)
    edges = np.linspace(0.0, 1.0, n + 1)
    # cell slopes of tau2, tau3 so that the piecewise-linear traces interpolate the data
    mu2 = np.diff(data.tau2(edges)) * n
    mu3 = np.diff(data.tau3(edges)) * n
    field = ParabolicField(
        KernelCache(lam),
        np.asarray(data.tau1(x), float),
        np.asarray(data.dtau1(x), float),
        float(data.tau2(0.0)),
        float(data.tau3(0.0)),
        mu2,
        mu3,
    )
    y = np.asarray(y, float)
    m = np.rint(y * n)
    if np.allclose(m / n, y, atol=1e-14, rtol=0):
        return field.rows(m.astype(int))
    return np.array([field.at(float(v)) for v in y])


def compare_representation(data: BoundaryData, cfg: FdConfig) -> float:
    """Max difference between the Green's-function solution and the FD oracle at interior nodes."""
    fd = fd_first_bvp(data.tau1, data.tau2, data.tau3, cfg)
    rep = representation_field(data, cfg.lam, cfg.nx - 1, cfg.y)
    return float(np.max(np.abs(rep[1:, 1:-1] - fd[1:, 1:-1])))
