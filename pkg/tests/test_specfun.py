from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fracmixed.errors import NonConvergence
from fracmixed.specfun import (
    WrightParams,
    WrightTable,
    cutoff_bound,
    mittag_leffler,
    recip_gamma,
    wright_e,
    wright_identity_residuals,
    wright_params,
)

RHOS = [0.15, 0.25, 0.4, 0.5]


def _mp_terms(rho, delta, z, mu):
    # decimal parameters at working precision: float rho * n misses the poles of Gamma
    rho, delta = mpmath.mpf(repr(rho)), mpmath.mpf(repr(delta))
    n = 0
    small = 0
    while True:
        term = z**n * mpmath.rgamma(n + mu) * mpmath.rgamma(delta - rho * n)
        yield term
        # terms vanish exactly at poles of Gamma, so wait for a run of small ones
        small = small + 1 if abs(term) < mpmath.mpf(10) ** (-mpmath.mp.dps + 5) else 0
        if n > 10 and small >= 8:
            return
        n += 1


def mp_wright(rho: float, delta: float, z: float, mu: float = 1.0) -> float:
    """High-precision partial sums of the defining series, with enough digits to absorb cancellation."""
    with mpmath.workdps(30):
        peak = max(abs(t) for t in _mp_terms(rho, delta, mpmath.mpf(z), mu))
    dps = 40 + max(0, int(mpmath.log10(peak)))
    with mpmath.workdps(dps):
        return float(mpmath.fsum(_mp_terms(rho, delta, mpmath.mpf(z), mu)))


def mp_mittag_leffler(lam: float, z: float) -> float:
    """Series for small |z|; for large |z| the completely monotone integral
    ``E(-t^lam) = int_0^inf e^{-r t} K(r) dr``."""
    if abs(z) <= 10 or lam == 1.0:
        with mpmath.workdps(60):
            return float(mpmath.nsum(lambda n: mpmath.mpf(z) ** n * mpmath.rgamma(lam * n + 1), [0, mpmath.inf]))
    with mpmath.workdps(40):
        t = mpmath.mpf(-z) ** (1 / mpmath.mpf(lam))
        s, c = mpmath.sinpi(lam), mpmath.cospi(lam)

        def k(r):
            return mpmath.exp(-r * t) * r ** (lam - 1) * s / (r ** (2 * lam) + 2 * r**lam * c + 1) / mpmath.pi

        # geometric breakpoints resolve the r^(lam - 1) endpoint singularity
        edges = [0] + [mpmath.mpf(10) ** j / t for j in range(-8, 4)] + [mpmath.inf]
        return float(mpmath.quad(k, edges))


# {{{ reciprocal gamma


@pytest.mark.parametrize(
    ("x", "expected"), [(1.0, 1.0), (0.0, 0.0), (-3.0, 0.0), (0.5, 0.5641895835477563)]
)
def test_recip_gamma_values(x, expected):
    assert recip_gamma(x) == pytest.approx(expected, abs=1e-15)


@given(st.floats(min_value=-20, max_value=20, allow_nan=False))
def test_recip_gamma_recurrence(x):
    lhs = recip_gamma(x)
    rhs = x * recip_gamma(x + 1.0)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


# }}}


# {{{ Wright function


def test_wright_examples():
    p = wright_params(0.5, 0.5)
    assert wright_e(p, 0.0) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-15)
    assert wright_e(p, -1.0) == pytest.approx(math.exp(-0.25) / math.sqrt(math.pi), rel=1e-13)
    assert abs(wright_e(p, -20.0)) <= 1e-30


def test_gaussian_closed_form():
    z = -np.arange(0, 33) * 0.25
    got = wright_e(wright_params(0.5, 0.5), z)
    assert_allclose(got, np.exp(-(z**2) / 4) / math.sqrt(math.pi), rtol=0, atol=1e-13)


@pytest.mark.parametrize("rho", RHOS)
@pytest.mark.parametrize("which", ["1-rho", "rho", "1", "0", "2"])
@pytest.mark.parametrize("z", [-0.1, -1.0, -3.5, -8.0, -15.0])
def test_wright_against_mpmath(rho, which, z):
    delta = {"1-rho": 1 - rho, "rho": rho, "1": 1.0, "0": 0.0, "2": 2.0}[which]
    ref = mp_wright(rho, delta, z)
    got = wright_e(wright_params(rho, delta), z)
    assert abs(got - ref) <= 2e-14 * max(1.0, abs(ref))


def test_non_wright_family_matches_series():
    p = WrightParams(alpha=1.0, beta=0.3, mu=2.0, delta=0.8)
    for z in (-0.5, -2.0):
        assert wright_e(p, z) == pytest.approx(mp_wright(0.3, 0.8, z, mu=2.0), rel=1e-12)


def test_non_wright_overflow_guard():
    p = WrightParams(alpha=1.0, beta=0.5, mu=2.0, delta=0.5, z_cutoff=1e4)
    with pytest.raises(NonConvergence):
        wright_e(p, -500.0)


def test_cutoff_reports_bound():
    p = wright_params(0.25, 0.75)
    info: dict = {}
    assert wright_e(p, np.array([-40.0, -1.0]), info)[0] == 0.0
    assert info["cutoff"] == 1
    assert 0 < info["cutoff_bound"] == cutoff_bound(p) < 1e-6


@settings(max_examples=30, deadline=None)
@given(
    st.sampled_from(RHOS),
    st.sampled_from([0.0, 0.5, 1.0]),
    st.floats(min_value=-25.0, max_value=0.0),
)
def test_tolerance_tightening(rho, delta, z):
    p = wright_params(rho, delta, series_tol=1e-10)
    a = wright_e(p, z)
    b = wright_e(p.replace(series_tol=5e-11), z)
    assert abs(a - b) <= 1e-10 * max(1.0, abs(a))


# }}}


# {{{ identities


@pytest.mark.parametrize("rho", RHOS)
@pytest.mark.parametrize("delta_kind", ["1-rho", "rho", "1"])
def test_identity_grid(rho, delta_kind):
    delta = {"1-rho": 1 - rho, "rho": rho, "1": 1.0}[delta_kind]
    p = wright_params(rho, delta)
    for z in np.linspace(-6.0, -0.1, 9):
        assert max(wright_identity_residuals(p, float(z))) <= 1e-9


def test_identity_two_example():
    r = wright_identity_residuals(wright_params(0.5, 1.0), -1.0)
    assert r[1] <= 1e-9


def test_identity_two_printed_sign_fails():
    r = wright_identity_residuals(wright_params(0.5, 1.0), -1.0, printed_sign=True)
    assert r[1] > 0.1


def test_identity_two_at_zero():
    for delta in (0.3, 0.75, 1.0, 1.6):
        q = wright_params(0.4, delta)
        lhs = wright_e(q.replace(delta=delta - 1), 0.0) + (1 - delta) * wright_e(q, 0.0)
        assert abs(lhs) <= 1e-15


def test_identity_one_against_small_step_difference():
    p = wright_params(0.5, 1.0)
    h = 1e-5
    numeric = (wright_e(p, -2.0 + h) - wright_e(p, -2.0 - h)) / (2 * h)
    analytic = -(wright_e(p.replace(delta=0.0), -2.0) + 0.0 * wright_e(p, -2.0)) / (0.5 * -2.0)
    assert abs(analytic - numeric) <= 1e-6


def test_identities_need_negative_argument():
    with pytest.raises(ValueError):
        wright_identity_residuals(wright_params(0.5, 1.0), 0.0)


# }}}


# {{{ Mittag-Leffler


@pytest.mark.parametrize(
    ("lam", "z", "expected"),
    [(1.0, -1.0, 0.36787944117144233), (0.5, 0.0, 1.0), (0.5, -1.0, 0.42758357615580705)],
)
def test_mittag_leffler_examples(lam, z, expected):
    assert mittag_leffler(lam, z) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("lam", [0.3, 0.5, 0.8])
@pytest.mark.parametrize("z", [-0.5, -4.0, -20.0, -90.0])
def test_mittag_leffler_against_mpmath(lam, z):
    assert mittag_leffler(lam, z) == pytest.approx(mp_mittag_leffler(lam, z), rel=1e-11, abs=1e-15)


def test_mittag_leffler_half_erfc():
    x = np.linspace(0.0, 6.0, 13)
    expected = np.array([float(mpmath.exp(v * v) * mpmath.erfc(v)) for v in x])
    assert_allclose(mittag_leffler(0.5, -x), expected, rtol=1e-12)


# }}}


# {{{ table


@pytest.mark.parametrize("rho", RHOS)
@pytest.mark.parametrize("delta_of", [lambda r: 1 - r, lambda r: r, lambda r: 0.0, lambda r: 1 - 2 * r])
def test_table_matches_direct(rho, delta_of):
    delta = delta_of(rho)
    tab = WrightTable(rho, delta)
    z = np.linspace(-29.9, 0.0, 997)
    assert_allclose(tab(z), wright_e(wright_params(rho, delta), z), rtol=0, atol=1e-12)
    assert tab(np.array([-31.0]))[0] == 0.0


def test_table_support_decay():
    tab = WrightTable(0.25, 0.75)
    beyond = np.linspace(-tab.params.z_cutoff, -tab.support, 50)
    assert np.max(np.abs(tab(beyond))) <= tab.support_bound


# }}}
