"""Image-series kernels of the time-fractional diffusion equation on the unit interval.

Every kernel is a sum over reflections ``x -> x + 2n`` of one Wright-type
profile.  With ``rho = lam / 2`` and ``W_d(z) = e^{1,d}_{1,rho}(z)``:

* ``G(x, y; x1, y1)``  Green's function, profile ``s^(rho-1) W_rho``, ``s = y - y1``;
* ``Gbar(x, x1, y)``   time-smoothed Green's function, profile ``y^-rho W_{1-rho}``;
* ``G_x1``             source-boundary derivative, profile ``s^-1 W_0``;
* ``P``, ``Q``         first and second antiderivatives of ``G_x1`` in ``s``;
* ``K1``, ``K2``       observation-boundary flux kernels, profile ``s^-rho W_{1-rho}``.

The derivative identities ``W_d' = W_{d-rho}`` and
``W_{d-1} + (1-d) W_d = -rho z W_{d-rho}`` connect them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy.special import gamma, rgamma

from fracmixed.errors import DegenerateTime, OutOfDomain, ValidationError
from fracmixed.fracquad import quad_double_singular
from fracmixed.specfun import WrightTable, wright_e, wright_params, wright_table


# {{{ kernel cache


@dataclass
class KernelCache:
    """Shared Wright tables, image-truncation policy and truncation bookkeeping.

    :arg n_images: minimum image half-width; it is extended per evaluation until
        the dropped rings lie beyond the decay support of the profile.
    :arg exact: evaluate profiles with :func:`wright_e` instead of tables
        (slow; used by the reference routes in the tests).
    """

    lam: float
    n_images: int = 5
    z_cutoff: float = 30.0
    exact: bool = False
    entries: dict[tuple[Any, ...], float] = field(default_factory=dict, repr=False)
    truncation_report: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not 0 < self.lam <= 1:
            raise ValidationError(f"lambda must lie in (0, 1], got {self.lam!r}", stage="greens")
        if self.n_images < 1:
            raise ValidationError("n_images must be >= 1", stage="greens")

    @property
    def rho(self) -> float:
        return 0.5 * self.lam

    def table(self, delta: float) -> WrightTable:
        return wright_table(self.rho, float(delta), self.z_cutoff)

    def profile(self, delta: float) -> Callable[[np.ndarray], np.ndarray]:
        if self.exact:
            p = wright_params(self.rho, delta, z_cutoff=self.z_cutoff)
            return lambda z: np.asarray(wright_e(p, z), dtype=float)
        return self.table(delta)

    def images(self, delta: float, s_max: float) -> np.ndarray:
        """Image indices ``-N..N`` covering the decay support for times up to ``s_max``."""
        reach = self.table(delta).support * max(s_max, 0.0) ** self.rho
        n = max(self.n_images, int(math.ceil(0.5 * (reach + 1.0))) + 1)
        return np.arange(-n, n + 1)

    def record(self, kind: str, bound: float) -> None:
        self.truncation_report[kind] = max(self.truncation_report.get(kind, 0.0), float(bound))

    def memo(self, key: tuple[Any, ...], fn: Callable[[], float]) -> float:
        if key not in self.entries:
            self.entries[key] = float(fn())
        return self.entries[key]


def _image_profile(
    cache: KernelCache,
    delta: float,
    offset: np.ndarray,
    s: np.ndarray,
    signed: str | None = None,
) -> np.ndarray:
    """Sum over n of ``sgn(offset + 2n) W_delta(-|offset + 2n| / s^rho)``.

    ``signed`` is None (no sign), ``"ge"`` (sign(0) = +1) or ``"gt"`` (sign(0) = -1).
    """
    offset, s = np.broadcast_arrays(np.asarray(offset, float), np.asarray(s, float))
    n = cache.images(delta, float(np.max(s)) if s.size else 0.0)
    shift = offset[..., None] + 2.0 * n
    d = np.abs(shift)
    prof = cache.profile(delta)
    w = prof(-d / s[..., None] ** cache.rho)
    if signed == "ge":
        w = np.where(shift >= 0, w, -w)
    elif signed == "gt":
        w = np.where(shift > 0, w, -w)
    tail = cache.table(delta).support_bound
    return w.sum(axis=-1), tail


# }}}


# {{{ Green's function and its relatives


def _positive_time(y: Any, y1: Any) -> np.ndarray:
    s = np.asarray(y, float) - np.asarray(y1, float)
    if np.any(s <= 0):
        raise DegenerateTime("need y1 < y", stage="greens")
    return s


def _unit_interval(*xs: Any) -> None:
    for x in xs:
        x = np.asarray(x, float)
        if np.any(x < 0) or np.any(x > 1):
            raise OutOfDomain("spatial arguments must lie in [0, 1]", stage="greens")


def green_eval(x: Any, y: Any, x1: Any, y1: Any, cache: KernelCache) -> Any:
    """First-boundary-problem Green's function ``G(x, y; x1, y1)``."""
    _unit_interval(x, x1)
    s = _positive_time(y, y1)
    x, x1 = np.asarray(x, float), np.asarray(x1, float)
    a, tail = _image_profile(cache, cache.rho, x - x1, s)
    b, _ = _image_profile(cache, cache.rho, x + x1, s)
    pref = 0.5 * s ** (cache.rho - 1.0)
    cache.record("G", float(np.max(pref)) * 2 * tail)
    out = pref * (a - b)
    return float(out) if out.ndim == 0 else out


def gbar_eval(x: Any, x1: Any, y: Any, cache: KernelCache, method: str = "closed") -> Any:
    """Time-smoothed Green's function ``Gbar(x - x1, y)``.

    ``method="closed"`` uses the term-wise Riemann-Liouville integral of the
    image series; ``method="quadrature"`` integrates ``G`` against
    ``y1^-lam / Gamma(1 - lam)`` numerically.  At ``lam = 1`` both return
    ``G(x, y; x1, 0)``.
    """
    _unit_interval(x, x1)
    y = np.asarray(y, float)
    if np.any(y <= 0):
        raise DegenerateTime("need y > 0", stage="greens")
    if method == "quadrature" and cache.lam < 1:
        return _gbar_quadrature(x, x1, y, cache)
    if method not in ("closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    rho = cache.rho
    x, x1 = np.asarray(x, float), np.asarray(x1, float)
    a, tail = _image_profile(cache, 1.0 - rho, x - x1, y)
    b, _ = _image_profile(cache, 1.0 - rho, x + x1, y)
    pref = 0.5 * y ** (-rho)
    cache.record("Gbar", float(np.max(pref)) * 2 * tail)
    out = pref * (a - b)
    return float(out) if out.ndim == 0 else out


def _gbar_quadrature(x: Any, x1: Any, y: Any, cache: KernelCache) -> Any:
    lam, rho = cache.lam, cache.rho

    def one(xv: float, x1v: float, yv: float) -> float:
        def smooth_part(s: np.ndarray) -> np.ndarray:
            # G * (y - y1)^(1 - rho) is bounded as y1 -> y
            a, _ = _image_profile(cache, rho, np.full_like(s, xv - x1v), s)
            b, _ = _image_profile(cache, rho, np.full_like(s, xv + x1v), s)
            return 0.5 * (a - b)

        return quad_double_singular(smooth_part, yv, lam, rho, rtol=1e-11, gap=True) * rgamma(1.0 - lam)

    vals = np.vectorize(one, otypes=[float])(x, x1, y)
    return float(vals) if vals.ndim == 0 else vals


def gx1_eval(x: Any, y: Any, boundary: int, y1: Any, cache: KernelCache) -> Any:
    """Derivative ``dG/dx1`` at the source boundary ``x1 = 0`` or ``x1 = 1``."""
    _unit_interval(x)
    s = _positive_time(y, y1)
    x = np.asarray(x, float)
    if boundary == 0:
        val, tail = _image_profile(cache, 0.0, x, s, signed="ge")
    elif boundary == 1:
        val, tail = _image_profile(cache, 0.0, x - 1.0, s, signed="gt")
    else:
        raise ValidationError("boundary must be 0 or 1", stage="greens")
    cache.record("Gx1", float(np.max(1.0 / s)) * 2 * tail)
    out = val / s
    return float(out) if out.ndim == 0 else out


def boundary_potential(x: Any, s: Any, boundary: int, cache: KernelCache) -> Any:
    """``P(x, s)``, the antiderivative in ``s`` of :func:`gx1_eval` with ``P(x, 0+) = 0``.

    For ``boundary=0``: ``P(0, s) = 1`` and ``P(1, s) = 0``; for ``boundary=1``:
    ``P(0, s) = 0`` and ``P(1, s) = -1``.
    """
    x, s = np.asarray(x, float), np.asarray(s, float)
    if boundary == 0:
        val, tail = _image_profile(cache, 1.0, x, np.maximum(s, 1e-300), signed="ge")
    else:
        val, tail = _image_profile(cache, 1.0, x - 1.0, np.maximum(s, 1e-300), signed="gt")
    cache.record("P", 2 * tail)
    return np.where(s > 0, val, 0.0)


def boundary_potential_integral(x: Any, s: Any, boundary: int, cache: KernelCache) -> Any:
    """``Q(x, s) = int_0^s P(x, t) dt``, exact through ``W_2``."""
    x, s = np.asarray(x, float), np.asarray(s, float)
    sp = np.maximum(s, 1e-300)
    if boundary == 0:
        val, tail = _image_profile(cache, 2.0, x, sp, signed="ge")
    else:
        val, tail = _image_profile(cache, 2.0, x - 1.0, sp, signed="gt")
    cache.record("Q", 2 * tail * float(np.max(sp)))
    return np.where(s > 0, sp * val, 0.0)


# }}}


# {{{ observation-boundary kernels


def kernel_K1_singular(y: Any, y1: Any, cache: KernelCache) -> Any:
    s = _positive_time(y, y1)
    return s ** (-cache.rho) * rgamma(1.0 - cache.rho)


def kernel_K1_smooth(y: Any, y1: Any, cache: KernelCache) -> Any:
    """Image part ``K1~`` (rings ``n != 0``) of the diagonal flux kernel."""
    s = _positive_time(y, y1)
    rho = cache.rho
    n = cache.images(1.0 - rho, float(np.max(s)))
    n = n[n > 0]
    prof = cache.profile(1.0 - rho)
    w = prof(-2.0 * n / s[..., None] ** rho)
    tail = cache.table(1.0 - rho).support_bound
    cache.record("K1", float(np.max(s ** (-rho))) * 2 * tail)
    out = 2.0 * s ** (-rho) * w.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def kernel_K1(y: Any, y1: Any, cache: KernelCache) -> Any:
    return kernel_K1_singular(y, y1, cache) + kernel_K1_smooth(y, y1, cache)


def kernel_K2(y: Any, y1: Any, cache: KernelCache) -> Any:
    """Cross flux kernel: odd rings ``|2n + 1|``."""
    s = _positive_time(y, y1)
    rho = cache.rho
    n = cache.images(1.0 - rho, float(np.max(s)))
    n = n[n >= 0]
    prof = cache.profile(1.0 - rho)
    w = prof(-(2.0 * n + 1.0) / s[..., None] ** rho)
    tail = cache.table(1.0 - rho).support_bound
    cache.record("K2", float(np.max(s ** (-rho))) * 2 * tail)
    out = 2.0 * s ** (-rho) * w.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def gbar_x_density(boundary: int, x1: Any, y: Any, cache: KernelCache) -> Any:
    """Pointwise x-derivative of ``Gbar`` at the observation boundary ``x = 0`` or ``1``.

    The full trace kernel is this density plus the endpoint atoms returned by
    :func:`gbar_x_atoms`.
    """
    _unit_interval(x1)
    y = np.asarray(y, float)
    if np.any(y <= 0):
        raise DegenerateTime("need y > 0", stage="greens")
    x1 = np.asarray(x1, float)
    rho = cache.rho
    xi = x1 if boundary == 0 else 1.0 - x1
    val, tail = _image_profile(cache, 1.0 - 2.0 * rho, xi, y, signed="ge")
    cache.record("Gbar_x", float(np.max(y ** (-cache.lam))) * 2 * tail)
    out = y ** (-cache.lam) * val
    return out if boundary == 0 else -out


def gbar_x_atoms(boundary: int, y: Any, cache: KernelCache) -> tuple[Any, Any]:
    """Point masses of the observation-boundary trace kernel at ``x1 = 0`` and ``x1 = 1``."""
    k1 = kernel_K1(y, 0.0, cache)
    k2 = kernel_K2(y, 0.0, cache)
    if boundary == 0:
        return -k1, k2
    return -k2, k1


# }}}


# {{{ line integrals against piecewise-cubic data

#: Gauss-Legendre nodes per cell when the kernel is wide compared to a cell
CELL_GAUSS_NODES = 8


def _power_moments(cache: KernelCache, eta: np.ndarray, y: float, qmax: int) -> np.ndarray:
    """``T_q(eta) = int_0^eta t^q k(|t|) dt`` for ``q = 0..qmax``,
    with ``k(t) = y^-rho W_{1-rho}(-t / y^rho)``.

    Uses ``int_0^U u^q A_0 du = q!/Gamma(1 + q rho) - sum_i q!/(q-i)! U^(q-i) A_(i+1)(U)``
    where ``A_j(u) = W_{1-rho+j rho}(-u)`` and ``A_j' = -A_(j-1)``.
    """
    rho = cache.rho
    yr = y**rho
    u = np.abs(eta) / yr
    A = [None] + [cache.profile(1.0 - rho + j * rho)(-u) for j in range(1, qmax + 2)]
    out = np.empty((qmax + 1,) + np.shape(eta))
    for q in range(qmax + 1):
        m = math.factorial(q) * rgamma(1.0 + q * rho) * np.ones_like(u)
        for i in range(q + 1):
            m = m - math.factorial(q) / math.factorial(q - i) * u ** (q - i) * A[i + 1]
        sign = np.where(eta >= 0, 1.0, (-1.0) ** (q + 1))
        out[q] = sign * yr**q * m
    return out


def _cell_moments_exact(cache: KernelCache, start: np.ndarray, h: float, y: float) -> np.ndarray:
    T = _power_moments(cache, np.concatenate([start, start[-1:] + h]), y, 3)
    dT = np.diff(T, axis=1)
    out = np.empty((4, start.size))
    for p in range(4):
        acc = np.zeros(start.size)
        for q in range(p + 1):
            acc += math.comb(p, q) * (-start) ** (p - q) * dT[q]
        out[p] = acc / h**p
    return out


def _cell_moments_gauss(cache: KernelCache, start: np.ndarray, h: float, y: float) -> np.ndarray:
    t, w = np.polynomial.legendre.leggauss(CELL_GAUSS_NODES)
    theta = 0.5 * (t + 1.0)
    w = 0.5 * w
    eta = start[:, None] + h * theta
    k = y ** (-cache.rho) * cache.profile(1.0 - cache.rho)(-np.abs(eta) / y**cache.rho)
    return np.stack([h * (k * w * theta**p).sum(axis=1) for p in range(4)])


@dataclass(frozen=True)
class CellWeights:
    """Periodic cell moments of ``k(|.|)`` on a uniform grid of step ``h = 1/n``.

    ``moments[p, c] = int over cell c of ((eta - c h) / h)^p k(|eta|) d eta``,
    summed over all cells congruent to ``c`` modulo ``2n``.  Correlating them
    with cell data of a 2-periodic, cellwise-cubic function ``f`` gives
    ``int_R k(|xi - x_i|) f(xi) d xi`` at every node ``x_i``.
    """

    y: float
    n: int
    moments: np.ndarray

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def _hermite_weights(self) -> np.ndarray:
        I0, I1, I2, I3 = self.moments
        h = self.h
        return np.stack([
            I0 - 3 * I2 + 2 * I3,
            h * (I1 - 2 * I2 + I3),
            3 * I2 - 2 * I3,
            h * (I3 - I2),
        ])

    def correlate(self, cells: np.ndarray) -> np.ndarray:
        """Values at node offsets ``0..2n-1`` for Hermite cell data ``cells`` (4 x 2n)."""
        W = self._hermite_weights()
        spec = np.fft.rfft(cells, axis=1) * np.conj(np.fft.rfft(W, axis=1))
        return np.fft.irfft(spec.sum(axis=0), n=2 * self.n)

    def at(self, cells: np.ndarray, i: int) -> float:
        W = self._hermite_weights()
        return float(np.sum(cells * np.roll(W, i, axis=1)))


def cell_weights(cache: KernelCache, y: float, n: int) -> CellWeights:
    """Build :class:`CellWeights` for time ``y`` on the grid with ``n`` cells on [0, 1]."""
    if y <= 0:
        raise DegenerateTime("need y > 0", stage="greens")
    h = 1.0 / n
    rho = cache.rho
    width = y**rho
    reach = max(cache.table(1.0 - rho).support, cache.table(1.0).support) * width
    d = int(math.ceil(reach / h)) + 1
    j = np.arange(-d, d)
    start = j * h
    if width >= 2.0 * h:
        mom = _cell_moments_gauss(cache, start, h, y)
    else:
        # narrow kernel: few cells, so exact antiderivatives lose little to cancellation
        mom = _cell_moments_exact(cache, start, h, y)
    period = 2 * n
    idx = np.mod(j, period)
    per = np.stack([np.bincount(idx, weights=m, minlength=period) for m in mom])
    cache.record("cell", 2 * cache.table(1.0 - rho).support_bound)
    return CellWeights(y=y, n=n, moments=per)


def odd_extension_cells(values: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """Hermite cell data (value/slope at both ends) of the odd 2-periodic extension."""
    v = np.asarray(values, float)
    d = np.asarray(slopes, float)
    return np.stack([
        np.concatenate([v[:-1], -v[:0:-1]]),
        np.concatenate([d[:-1], d[:0:-1]]),
        np.concatenate([v[1:], -v[-2::-1]]),
        np.concatenate([d[1:], d[-2::-1]]),
    ])


def zero_extension_cells(values: np.ndarray, slopes: np.ndarray) -> np.ndarray:
    """Hermite cell data of nodal data on [0, 1] extended by zero on (1, 2)."""
    v = np.asarray(values, float)
    d = np.asarray(slopes, float)
    z = np.zeros(v.size - 1)
    return np.stack([
        np.concatenate([v[:-1], z]),
        np.concatenate([d[:-1], z]),
        np.concatenate([v[1:], z]),
        np.concatenate([d[1:], z]),
    ])


def gbar_integral(
    tau1: np.ndarray, dtau1: np.ndarray, y: float, cache: KernelCache, weights: CellWeights | None = None
) -> np.ndarray:
    """``int_0^1 Gbar(x_i - x1, y) tau1(x1) dx1`` at every grid node ``x_i`` for
    the cubic Hermite interpolant of ``tau1`` (exact for cubics)."""
    n = len(tau1) - 1
    cw = weights if weights is not None else cell_weights(cache, y, n)
    return 0.5 * cw.correlate(odd_extension_cells(tau1, dtau1))[: n + 1]


def trace_functionals(
    dtau1: np.ndarray, d2tau1: np.ndarray, y: float, cache: KernelCache, weights: CellWeights | None = None
) -> tuple[float, float]:
    """Flux contributions of the initial trace at ``x = 0`` and ``x = 1``.

    Returns ``int_0^1 E(x1, y) tau1'(x1) dx1`` and
    ``int_0^1 E(1 - x1, y) tau1'(x1) dx1`` with ``E(xi, y) = sum_m k(|xi + 2m|)``,
    for the cubic Hermite interpolant of ``tau1'``.  These equal the integral of
    the observation-boundary trace kernel (density plus endpoint atoms) against
    ``tau1``.
    """
    n = len(dtau1) - 1
    cw = weights if weights is not None else cell_weights(cache, y, n)
    cells = zero_extension_cells(dtau1, d2tau1)
    return cw.at(cells, 0), cw.at(cells, n)


# }}}
