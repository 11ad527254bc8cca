"""Caputo L1 differentiation and weakly singular quadrature rules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable


import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import gamma, roots_jacobi

from fracmixed.errors import DegenerateGrid, QuadratureFailure, ValidationError


def _check_step(h: float) -> None:
    if not np.isfinite(h) or h <= 0:
        raise DegenerateGrid(f"grid step must be positive, got {h!r}", stage="fracquad")


def _check_lambda(lam: float) -> None:
    if not 0 < lam <= 1:
        raise ValidationError(f"lambda must lie in (0, 1], got {lam!r}", stage="fracquad")


def l1_coefficients(n: int, lam: float) -> np.ndarray:
    """Return b_j = (j+1)^{1-lam} - j^{1-lam}, j = 0..n-1."""
    j = np.arange(n, dtype=float)
    return (j + 1.0) ** (1.0 - lam) - j ** (1.0 - lam)


def caputo_l1(g: np.ndarray, h: float, lam: float, axis: int = -1) -> np.ndarray:
    """L1 approximation of the Caputo derivative of uniformly sampled data.

    The sample at index 0 is the initial point; the returned value there is 0.
    For ``lam == 1`` the scheme reduces to the backward difference quotient.
    """
    _check_step(h)
    _check_lambda(lam)
    g = np.moveaxis(np.asarray(g, dtype=float), axis, -1)
    m = g.shape[-1]
    if m < 2:
        raise DegenerateGrid("caputo_l1 needs at least two samples", stage="fracquad")

    dg = np.diff(g, axis=-1)
    out = np.zeros_like(g)
    if lam == 1.0:
        out[..., 1:] = dg / h
        return np.moveaxis(out, -1, axis)

    # D_n = h^{-lam}/Gamma(2-lam) * sum_{k<n} b_{n-1-k} (g_{k+1} - g_k)
    b = l1_coefficients(m - 1, lam)
    scale = h ** (-lam) / gamma(2.0 - lam)
    flat = dg.reshape(-1, m - 1)
    conv = np.empty_like(flat)
    for i, row in enumerate(flat):
        conv[i] = np.convolve(b, row)[: m - 1]
    out[..., 1:] = scale * conv.reshape(dg.shape)
    return np.moveaxis(out, -1, axis)


def caputo_l1_nonuniform(g: np.ndarray, y: np.ndarray, lam: float) -> np.ndarray:
    """L1 Caputo derivative on an increasing, possibly graded, grid ``y``."""
    _check_lambda(lam)
    g = np.asarray(g, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2 or y.size != g.shape[-1]:
        raise DegenerateGrid("grid and samples must be 1-D of equal length >= 2", stage="fracquad")
    dy = np.diff(y)
    if np.any(dy <= 0):
        raise DegenerateGrid("grid must be strictly increasing", stage="fracquad")

    slope = np.diff(g, axis=-1) / dy
    out = np.zeros_like(g)
    if lam == 1.0:
        out[..., 1:] = slope
        return out
    c = 1.0 / gamma(2.0 - lam)
    for n in range(1, y.size):
        a = (y[n] - y[:n]) ** (1.0 - lam)
        b = (y[n] - y[1 : n + 1]) ** (1.0 - lam)
        out[..., n] = c * np.sum(slope[..., :n] * (a - b), axis=-1)
    return out


def product_weights(t: float, edges: np.ndarray, rho: float) -> np.ndarray:
    """Exact integrals of (t - s)^{-rho} over the cells [edges[k], edges[k+1]] with edges <= t."""
    e = np.minimum(np.asarray(edges, dtype=float), t)
    d = (t - e) ** (1.0 - rho)
    return (d[:-1] - d[1:]) / (1.0 - rho)


@dataclass(frozen=True)
class SingularWeights:
    """Product-integration weights for the Abel factor (y_n - s)^{-rho}.

    ``weights[k]`` multiplies the density value on cell ``[y_k, y_{k+1}]``.
    """

    n: int
    h: float
    rho: float
    weights: np.ndarray = field(repr=False)

    def apply(self, m: np.ndarray) -> float:
        return float(np.dot(self.weights, np.asarray(m, dtype=float)[: self.n]))

    @property
    def moment(self) -> float:
        """Exact value of the integral of the singular factor over [0, y_n]."""
        return (self.n * self.h) ** (1.0 - self.rho) / (1.0 - self.rho)


@lru_cache(maxsize=64)
def _abel_weights_cached(n: int, h: float, rho: float) -> np.ndarray:
    k = np.arange(n + 1, dtype=float)
    # distances y_n - y_k, reversed so the cell differences are positive
    d = ((n - k) * h) ** (1.0 - rho)
    w = (d[:-1] - d[1:]) / (1.0 - rho)
    w.setflags(write=False)
    return w


def abel_weights(n: int, h: float, rho: float) -> SingularWeights:
    if n < 1:
        raise DegenerateGrid(f"need n >= 1, got {n}", stage="fracquad")
    _check_step(h)
    if not 0 < rho < 1:
        raise ValidationError(f"rho must lie in (0, 1), got {rho!r}", stage="fracquad")
    return SingularWeights(n=n, h=h, rho=rho, weights=_abel_weights_cached(int(n), float(h), float(rho)))


@lru_cache(maxsize=128)
def _jacobi_rule(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    return roots_jacobi(n, alpha, beta)


def _graded_half(
    F: Callable[[np.ndarray], np.ndarray],
    y: float,
    near: float,
    far: float,
    expo: float,
    other: Callable[[np.ndarray], np.ndarray],
    n: int,
    levels: int,
    gap: bool,
) -> float:
    """Integral over the half between ``near`` (singular end) and ``far``.

    The integrand is ``|y1 - near|^expo * other(y1) * F(.)``.  Panels shrink
    geometrically towards ``near``; the last one carries the Jacobi weight.
    ``F`` receives ``y - y1`` when ``gap`` is set, formed without cancellation.
    """
    length = abs(far - near)
    direction = 1.0 if far > near else -1.0
    dist = length * 0.5 ** np.arange(levels + 1)

    def arg(r: np.ndarray, y1: np.ndarray) -> np.ndarray:
        if not gap:
            return y1
        return r if near == y else y - y1

    total = 0.0
    t, w = np.polynomial.legendre.leggauss(n)
    for a, b in zip(dist[1:], dist[:-1]):
        r = 0.5 * (a + b) + 0.5 * (b - a) * t
        y1 = near + direction * r
        total += 0.5 * (b - a) * np.sum(w * r**expo * other(y1) * F(arg(r, y1)))
    # innermost panel [0, dist[-1]] in the distance variable r = dist[-1] (1 + t) / 2
    t, w = _jacobi_rule(n, 0.0, expo)
    half = 0.5 * dist[-1]
    r = half * (1.0 + t)
    y1 = near + direction * r
    total += half ** (1.0 + expo) * np.sum(w * other(y1) * F(arg(r, y1)))
    return float(total)


def _double_singular_rule(
    F: Callable[[np.ndarray], np.ndarray], y: float, lam: float, rho: float, n: int, gap: bool, levels: int = 40
) -> float:
    mid = 0.5 * y
    left = _graded_half(F, y, 0.0, mid, -lam, lambda t: (y - t) ** (rho - 1.0), n, levels, gap)
    # F may vary like (y - y1)^rho; grade until the endpoint panel is below 1e-12 in that scale
    deep = max(levels, int(math.ceil(12.0 / (rho * math.log10(2.0)))))
    right = _graded_half(F, y, y, mid, rho - 1.0, lambda t: t ** (-lam), n, deep, gap)
    return left + right


def quad_double_singular(
    F: Callable[[np.ndarray], np.ndarray],
    y: float,
    lam: float,
    rho: float,
    rtol: float = 1e-10,
    n_start: int = 4,
    n_max: int = 256,
    gap: bool = False,
) -> float:
    """Integral of y1^{-lam} (y - y1)^{rho-1} F(y1) over (0, y).

    Each half of the interval is split into panels graded geometrically towards
    its singular endpoint; the endpoint panel uses a Gauss-Jacobi rule with the
    singular weight and the others Gauss-Legendre.  Nodes per panel double until
    successive values agree to ``rtol``.  With ``gap=True`` the integrand is
    called with ``y - y1`` instead of ``y1``, which keeps full relative
    precision next to ``y1 = y``.
    """
    if not y > 0:
        raise DegenerateGrid(f"need y > 0, got {y!r}", stage="fracquad")
    if not (0 <= lam < 1 and 0 < rho <= 1):
        raise ValidationError("need 0 <= lam < 1 and 0 < rho <= 1", stage="fracquad")

    n = n_start
    prev = _double_singular_rule(F, y, lam, rho, n, gap)
    while n < n_max:
        n *= 2
        cur = _double_singular_rule(F, y, lam, rho, n, gap)
        change = abs(cur - prev)
        if change <= rtol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise QuadratureFailure(
        f"no convergence to rtol={rtol:g} with {n_max} nodes per panel (last change {change:.3e})",
        stage="fracquad",
    )


def beta_reference(y: float, lam: float, rho: float) -> float:
    """Closed form of the double-singular integral for F = 1."""
    return y ** (rho - lam) * beta_fn(1.0 - lam, rho)
