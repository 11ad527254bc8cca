"""Wright-type function, reciprocal gamma and Mittag-Leffler function.

The Wright-type function used throughout the package is

.. math::

    e^{\\mu,\\delta}_{\\alpha,\\beta}(z)
        = \\sum_{n=0}^\\infty \\frac{z^n}{\\Gamma(\\alpha n + \\mu)\\Gamma(\\delta - \\beta n)}.

For ``alpha = mu = 1`` this is the Wright function of the second kind
:math:`W_{-\\beta,\\delta}(z)`, and it is the only case that appears in the
Green's function of the fractional diffusion operator. Negative arguments of
moderate size make the power series lose all accuracy to cancellation (the
terms grow like the reciprocal of the result), so for ``alpha = mu = 1`` the
evaluation switches to the Hankel-contour (inverse Laplace transform)
representation

.. math::

    W_{-\\beta,\\delta}(-x) = \\frac{1}{2\\pi i}\\int_{Ha} e^{s - x s^\\beta} s^{-\\delta} ds,

discretized with the trapezoidal rule on a parabolic contour that passes
through the saddle point of the integrand.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import special
from scipy.interpolate import CubicHermiteSpline

from fracmixed.errors import NonConvergence

EPS = float(np.finfo(float).eps)

#: largest tolerated sum of absolute series terms before switching to the contour
CANCELLATION_LIMIT = 64.0
#: absolute-term sum at which a series-only evaluation is declared hopeless
OVERFLOW_GUARD = 1.0e12
#: trapezoidal nodes on the half contour
CONTOUR_NODES = 32

#: relative size below which tabulated values count as decayed
SUPPORT_THRESHOLD = 1.0e-18


@dataclass(frozen=True)
class WrightParams:
    """Parameters of :math:`e^{\\mu,\\delta}_{\\alpha,\\beta}`."""

    alpha: float = 1.0
    beta: float = 0.5
    mu: float = 1.0
    delta: float = 0.5
    series_tol: float = 1.0e-15
    #: arguments below ``-z_cutoff`` evaluate to zero
    z_cutoff: float = 30.0

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive: {self.alpha}")
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must be in (0, 1): {self.beta}")
        if not (self.series_tol > 0 and self.z_cutoff > 0):
            raise ValueError("series_tol and z_cutoff must be positive")

    @property
    def is_wright(self) -> bool:
        """True when the contour representation applies (``alpha = mu = 1``)."""
        return self.alpha == 1.0 and self.mu == 1.0

    def replace(self, **kwargs: Any) -> WrightParams:
        fields = {
            "alpha": self.alpha,
            "beta": self.beta,
            "mu": self.mu,
            "delta": self.delta,
            "series_tol": self.series_tol,
            "z_cutoff": self.z_cutoff,
        }
        fields.update(kwargs)
        return WrightParams(**fields)


def wright_params(rho: float, delta: float, **kwargs: Any) -> WrightParams:
    """Shortcut for the ``alpha = mu = 1`` family :math:`e^{1,\\delta}_{1,\\rho}`."""
    return WrightParams(alpha=1.0, beta=rho, mu=1.0, delta=delta, **kwargs)


# {{{ reciprocal gamma


def recip_gamma(x: Any) -> Any:
    """Entire function :math:`1/\\Gamma(x)`, exactly zero at the poles of Gamma."""
    return special.rgamma(x)


def _snap_poles(a: np.ndarray) -> np.ndarray:
    # parameters such as delta - beta * n are meant to hit integers exactly
    # (e.g. beta = 0.25, delta = 0.75); rounding leaves them 1 ulp away, which
    # turns an exact zero coefficient into eps * (large factorial)
    r = np.round(a)
    near = np.abs(a - r) <= 64 * EPS * np.maximum(1.0, np.abs(a))
    return np.where(near, r, a)


def _log_recip_gamma(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(log|1/Gamma(a)|, sign(1/Gamma(a)))`` with sign 0 at the poles."""
    a = _snap_poles(np.asarray(a, dtype=float))
    pole = (a <= 0) & (a == np.round(a))
    safe = np.where(pole, 0.5, a)
    logmag = np.where(pole, -np.inf, -special.gammaln(safe))
    sign = np.where(pole, 0.0, special.gammasgn(safe))
    return logmag, sign


def _log_recip_gamma_envelope(a: np.ndarray) -> np.ndarray:
    # |1/Gamma(a)| = |Gamma(1 - a) sin(pi a)| / pi <= Gamma(1 - a) / pi
    a = np.asarray(a, dtype=float)
    left = special.gammaln(np.maximum(1.0 - a, 0.5)) - math.log(math.pi)
    right = -special.gammaln(np.maximum(a, 0.5))
    return np.where(a > 0.5, right, left)


# }}}


# {{{ power series


def _coefficients(p: WrightParams, nterms: int) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(nterms, dtype=float)
    la, sa = _log_recip_gamma(p.delta - p.beta * n)
    lb, sb = _log_recip_gamma(p.alpha * n + p.mu)
    return la + lb, sa * sb


def _envelope(p: WrightParams, n: np.ndarray) -> np.ndarray:
    return _log_recip_gamma_envelope(p.delta - p.beta * n) + _log_recip_gamma_envelope(
        p.alpha * n + p.mu
    )


def _term_count(p: WrightParams, zmax: float, tol: float) -> int:
    """Number of series terms after which every remaining term is below ``tol``."""
    n = np.arange(4096, dtype=float)
    if zmax > 0:
        env = _envelope(p, n) + n * math.log(zmax)
    else:
        env = np.where(n > 0, -np.inf, _envelope(p, n))
    # the envelope is eventually concave in n, so once it is past its peak and
    # below tolerance the remaining terms only shrink
    peak = int(np.argmax(env[: max(8, int(4 * zmax) + 16)]))
    below = np.nonzero((env < math.log(tol)) & (n > peak))[0]
    if below.size == 0:
        raise NonConvergence(f"series did not reach tolerance for |z| = {zmax}")
    return int(below[0]) + 2


def _power_series(
    logc: np.ndarray, sgn: np.ndarray, z: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Sum ``sum_n c_n z^n`` with Neumaier compensation.

    Returns the sum and the sum of absolute terms (the rounding-error scale).
    """
    s = np.zeros_like(z)
    comp = np.zeros_like(z)
    absum = np.zeros_like(z)
    az = np.abs(z)
    with np.errstate(divide="ignore"):
        logz = np.log(az)
    zsign = np.sign(z)
    for n in range(logc.size):
        if sgn[n] == 0.0:
            continue
        if n == 0:
            t = np.full_like(z, sgn[0] * math.exp(logc[0]))
        else:
            t = np.where(az > 0, sgn[n] * zsign**n * np.exp(logc[n] + n * logz), 0.0)
        big = np.abs(s) >= np.abs(t)
        tmp = s + t
        comp += np.where(big, (s - tmp) + t, (t - tmp) + s)
        s = tmp
        absum += np.abs(t)
    return s + comp, absum


@functools.lru_cache(maxsize=256)
def _series_radius(p: WrightParams) -> float:
    """Largest ``|z|`` for which the series stays within ``CANCELLATION_LIMIT``."""

    def absum(r: float) -> float:
        nterms = _term_count(p, r, p.series_tol)
        logc, sgn = _coefficients(p, nterms)
        _, a = _power_series(logc, np.abs(sgn), np.array([-r]))
        return float(a[0])

    lo, hi = 0.0, 1.0
    while absum(hi) <= CANCELLATION_LIMIT and hi < p.z_cutoff:
        lo, hi = hi, 2 * hi
    if hi >= p.z_cutoff and absum(hi) <= CANCELLATION_LIMIT:
        return hi
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if absum(mid) <= CANCELLATION_LIMIT:
            lo = mid
        else:
            hi = mid
    return lo


# }}}


# {{{ contour integral


def _contour_wright(beta: float, delta: float, x: np.ndarray) -> np.ndarray:
    """Evaluate :math:`W_{-\\beta,\\delta}(-x)` for ``x > 0`` by contour quadrature."""
    nodes = CONTOUR_NODES
    h = 3.0 / nodes
    theta = h * np.arange(nodes + 1)
    saddle = (beta * x) ** (1.0 / (1.0 - beta))
    mu = np.maximum(math.pi * nodes / 12.0, saddle)[:, None]

    w = 1.0 + 1j * theta
    s = mu * w**2
    f = np.exp(s - x[:, None] * s**beta) * s ** (-delta) * w
    f[:, 0] *= 0.5
    return (2.0 * h / math.pi) * mu[:, 0] * np.real(f.sum(axis=1))


def _contour_mittag_leffler(lam: float, z: np.ndarray) -> np.ndarray:
    nodes = CONTOUR_NODES
    h = 3.0 / nodes
    theta = h * np.arange(nodes + 1)
    mu = math.pi * nodes / 12.0

    w = 1.0 + 1j * theta
    s = mu * w**2
    f = np.exp(s) * s ** (lam - 1.0) / (s**lam - z[:, None]) * w
    f[:, 0] *= 0.5
    return (2.0 * h / math.pi) * mu * np.real(f.sum(axis=1))


def _chunked(fn: Any, x: np.ndarray, *args: Any, chunk: int = 65536) -> np.ndarray:
    out = np.empty_like(x)
    for i in range(0, x.size, chunk):
        out[i : i + chunk] = fn(*args, x[i : i + chunk])
    return out


# }}}


# {{{ public evaluators


def wright_e(p: WrightParams, z: Any, info: dict[str, Any] | None = None) -> Any:
    """Evaluate the Wright-type function :math:`e^{\\mu,\\delta}_{\\alpha,\\beta}(z)`.

    :arg z: real scalar or array, normally non-positive.
    :arg info: optional dictionary that receives evaluation counts per method
        and, if the cutoff was applied, the bound ``cutoff_bound`` on the
        discarded values.
    """
    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zf = zarr.ravel()
    out = np.zeros_like(zf)

    cut = zf < -p.z_cutoff
    if p.is_wright:
        radius = _series_radius(p)
        use_series = ~cut & (np.abs(zf) <= radius)
        use_contour = ~cut & ~use_series
    else:
        use_series = ~cut
        use_contour = np.zeros_like(cut)

    if use_series.any():
        zs = zf[use_series]
        zmax = float(np.max(np.abs(zs)))
        nterms = _term_count(p, zmax, p.series_tol)
        logc, sgn = _coefficients(p, nterms)
        val, absum = _power_series(logc, sgn, zs)
        if not p.is_wright and np.max(absum) > OVERFLOW_GUARD:
            raise NonConvergence(
                f"series terms reach {np.max(absum):.3e} for |z| = {zmax}; "
                "the argument is outside the stable summation range"
            )
        out[use_series] = val

    if use_contour.any():
        x = -zf[use_contour]
        if np.any(x <= 0):
            raise NonConvergence("contour evaluation needs negative arguments")
        out[use_contour] = _chunked(_contour_wright, x, p.beta, p.delta)

    if info is not None:
        info["series"] = info.get("series", 0) + int(use_series.sum())
        info["contour"] = info.get("contour", 0) + int(use_contour.sum())
        info["cutoff"] = info.get("cutoff", 0) + int(cut.sum())
        if cut.any():
            info["cutoff_bound"] = max(info.get("cutoff_bound", 0.0), cutoff_bound(p))

    out = out.reshape(zarr.shape)
    return float(out) if scalar else out


@functools.lru_cache(maxsize=256)
def cutoff_bound(p: WrightParams) -> float:
    """Bound on ``|e(z)|`` for ``z < -z_cutoff``.

    Beyond its last sign change the function decays monotonically like
    ``exp(-(1 - beta) beta^(beta / (1 - beta)) |z|^(1 / (1 - beta)))``, so twice
    the value at the cutoff bounds everything that is dropped.
    """
    if not p.is_wright:
        return math.inf
    x = np.array([p.z_cutoff])
    return 2.0 * abs(float(_contour_wright(p.beta, p.delta, x)[0]))


def mittag_leffler(lam: float, z: Any, series_tol: float = 1.0e-15) -> Any:
    """Mittag-Leffler function :math:`E_\\lambda(z) = \\sum z^n / \\Gamma(\\lambda n + 1)`."""
    if not 0 < lam <= 1:
        raise ValueError(f"lambda must be in (0, 1]: {lam}")

    zarr = np.asarray(z, dtype=float)
    scalar = zarr.ndim == 0
    zf = zarr.ravel()
    if lam == 1.0:
        out = np.exp(zf)
        return float(out[0]) if scalar else out.reshape(zarr.shape)

    n = np.arange(4096, dtype=float)
    logc_all = -special.gammaln(lam * n + 1.0)

    def absum(r: float) -> float:
        return float(np.exp(logc_all[:400] + n[:400] * math.log(r)).sum())

    radius = 0.0 if absum(1.0) > CANCELLATION_LIMIT else 1.0
    if radius > 0:
        lo, hi = 1.0, 2.0
        while absum(hi) <= CANCELLATION_LIMIT:
            lo, hi = hi, 2 * hi
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if absum(mid) <= CANCELLATION_LIMIT else (lo, mid)
        radius = lo

    out = np.empty_like(zf)
    small = np.abs(zf) <= radius
    if small.any():
        zs = zf[small]
        zmax = max(float(np.max(np.abs(zs))), 1e-300)
        terms = logc_all + n * math.log(zmax)
        peak = int(np.argmax(terms))
        nterms = int(np.nonzero((terms < math.log(series_tol)) & (n > peak))[0][0]) + 2
        val, _ = _power_series(logc_all[:nterms], np.ones(nterms), zs)
        out[small] = val
    if (~small).any():
        zl = zf[~small]
        if np.any(zl > 0):
            raise NonConvergence("large positive arguments are not supported")
        out[~small] = _chunked(_contour_mittag_leffler, zl, lam)

    out = out.reshape(zarr.shape)
    return float(out) if scalar else out


# }}}


# {{{ identities


def _derivative(f: Any, z: float, h: float = 0.05, levels: int = 4) -> float:
    """Central difference refined by Richardson extrapolation."""
    table = []
    for k in range(levels):
        hk = h / 2**k
        table.append((f(z + hk) - f(z - hk)) / (2 * hk))
    for m in range(1, levels):
        factor = 4.0**m
        table = [
            (factor * table[i + 1] - table[i]) / (factor - 1) for i in range(len(table) - 1)
        ]
    return float(table[0])


def wright_identity_residuals(
    p: WrightParams, z: float, *, printed_sign: bool = False
) -> tuple[float, float, float, float]:
    """Absolute residuals of the four differentiation/recurrence identities.

    With ``e(z) = e^{mu,delta}_{alpha,beta}(z)``:

    1. ``e'(z) = -[e^{mu,delta-1}(z) + (1 - delta) e(z)] / (beta z)``;
    2. ``e^{1,delta-1}_{1,beta}(z) + (1 - delta) e^{1,delta}_{1,beta}(z)
       = -beta z e^{1,delta-beta}_{1,beta}(z)``;
    3. ``d/dw [w^(mu-1) e^{mu,delta}(c w^alpha)] = w^(mu-2) e^{mu-1,delta}(c w^alpha)``;
    4. ``d/dw [w^(delta-1) e^{mu,delta}(c w^-beta)] = w^(delta-2) e^{mu,delta-1}(c w^-beta)``.

    Identities 3 and 4 are checked at ``w = 1`` with ``c = z``. Derivatives on
    the left-hand sides are central differences with Richardson extrapolation.
    ``printed_sign=True`` evaluates identity 2 with ``+beta z`` on the right,
    which does not hold and is kept only to document the discrepancy.
    """
    if not z < 0:
        raise ValueError(f"identities are checked at negative arguments only: {z}")

    def e(q: WrightParams, arg: float) -> float:
        return float(wright_e(q, arg))

    d = p.delta
    h = min(0.05, 0.25 * abs(z))

    # 1. derivative identity
    lhs1 = _derivative(lambda t: e(p, t), z, h)
    rhs1 = -(e(p.replace(delta=d - 1), z) + (1 - d) * e(p, z)) / (p.beta * z)
    r1 = abs(lhs1 - rhs1)

    # 2. recurrence, alpha = mu = 1
    q = p.replace(alpha=1.0, mu=1.0)
    lhs2 = e(q.replace(delta=d - 1), z) + (1 - d) * e(q, z)
    sign = 1.0 if printed_sign else -1.0
    rhs2 = sign * p.beta * z * e(q.replace(delta=d - p.beta), z)
    r2 = abs(lhs2 - rhs2)

    # 3. derivative in the power-scaled variable
    def g3(w: float) -> float:
        return w ** (p.mu - 1) * e(p, z * w**p.alpha)

    lhs3 = _derivative(g3, 1.0, 0.5 * h)
    rhs3 = e(p.replace(mu=p.mu - 1), z)
    r3 = abs(lhs3 - rhs3)

    # 4. derivative in the inverse-power-scaled variable
    def g4(w: float) -> float:
        return w ** (d - 1) * e(p, z * w ** (-p.beta))

    lhs4 = _derivative(g4, 1.0, 0.5 * h)
    rhs4 = e(p.replace(delta=d - 1), z)
    r4 = abs(lhs4 - rhs4)

    return r1, r2, r3, r4


# }}}


# {{{ tabulated evaluation


class WrightTable:
    """Cubic Hermite interpolant of :math:`W_{-\\rho,\\delta}` on ``[-z_cutoff, 0]``.

    Node derivatives come from :math:`W' = W_{-\\rho,\\delta-\\rho}`, so the
    interpolant is accurate to ``step^4`` times the fourth derivative.
    """

    def __init__(
        self, rho: float, delta: float, z_cutoff: float = 30.0, step: float = 2.0e-3
    ) -> None:
        self.params = wright_params(rho, delta, z_cutoff=z_cutoff)
        npoints = int(math.ceil(z_cutoff / step)) + 1
        self.grid = np.linspace(-z_cutoff, 0.0, npoints)
        values = wright_e(self.params, self.grid)
        slopes = wright_e(self.params.replace(delta=delta - rho), self.grid)
        self._spline = CubicHermiteSpline(self.grid, values, slopes, extrapolate=False)
        self.tail_bound = cutoff_bound(self.params)
        # |W| stays below support_bound for z < -support; image sums stop there
        self.support_bound = SUPPORT_THRESHOLD * max(1.0, float(np.max(np.abs(values))))
        big = np.nonzero(np.abs(values) > self.support_bound)[0]
        self.support = float(-self.grid[big[0]]) + step if big.size else step
        self.support = min(self.support, z_cutoff)
        self.support_bound = max(self.support_bound, self.tail_bound)

    def __call__(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = self._spline(np.clip(z, -self.params.z_cutoff, 0.0))
        return np.where(z < -self.params.z_cutoff, 0.0, out)


@functools.lru_cache(maxsize=64)
def wright_table(rho: float, delta: float, z_cutoff: float = 30.0) -> WrightTable:
    return WrightTable(rho, delta, z_cutoff)


# }}}
