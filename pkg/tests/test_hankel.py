import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from rbfbern.hankel import (
    DEFAULT_SPEC,
    HankelSpec,
    QuadratureError,
    RadialFunction,
    decay_check,
    loglog_slope,
    origin_constant,
    parse_alphas,
    radial_fourier,
    radial_moment,
)
from rbfbern.kernels import make_kernel
from rbfbern.rbf import sobolev_spline

import oracles


def gauss(t):
    return np.exp(-np.asarray(t) ** 2 / 2)


def test_origin_constant_values():
    assert origin_constant(1) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)
    assert origin_constant(2) == pytest.approx(1.0, rel=1e-15)
    assert origin_constant(3) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-15)


def test_d1_matches_cosine_quadrature():
    g = lambda t: (1 + np.asarray(t) ** 2) ** -2.0
    for r in (0.3, 1.0, 2.5, 7.0):
        ref, _ = integrate.quad(lambda t: float(g(t)), 0, np.inf, weight="cos", wvar=r, epsabs=1e-13)
        assert radial_fourier(g, 1, r) == pytest.approx(math.sqrt(2 / math.pi) * ref, abs=1e-10)


def test_gaussian_d1_against_grid_dft():
    r = np.arange(0, 64) * math.pi / 40
    ref = oracles.grid_fourier_1d(gauss, r)
    np.testing.assert_allclose(radial_fourier(gauss, 1, r), ref, rtol=0, atol=1e-8)


def test_gaussian_d2_against_grid_dft():
    r = np.arange(0, 24) * math.pi / 12
    ref = oracles.grid_fourier_2d(gauss, r)
    np.testing.assert_allclose(radial_fourier(gauss, 2, r), ref, rtol=0, atol=1e-8)


@pytest.mark.parametrize("dim", [1, 2, 3, 4])
def test_gaussian_is_self_dual(dim):
    r = np.linspace(0, 6, 25)
    np.testing.assert_allclose(radial_fourier(gauss, dim, r), gauss(r), rtol=0, atol=1e-8)


def test_origin_value_is_moment():
    g = lambda t: np.exp(-np.asarray(t))
    for dim in (1, 2, 3):
        assert radial_moment(g, dim) == pytest.approx(math.gamma(dim), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), r=st.one_of(st.just(0.0), st.floats(1e-6, 8.0)), dim=st.integers(1, 3))
def test_linearity(a, b, r, dim):
    g1 = gauss
    g2 = lambda t: (1 + np.asarray(t) ** 2) ** -2.5
    both = radial_fourier(lambda t: a * g1(t) + b * g2(t), dim, r)
    sep = a * radial_fourier(g1, dim, r) + b * radial_fourier(g2, dim, r)
    assert both == pytest.approx(sep, abs=1e-9 * (1 + abs(a) + abs(b)))


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_panel_halving_self_consistency(dim):
    g = lambda t: (1 + np.asarray(t) ** 2) ** -((dim + 2) / 2)
    r = np.array([0.0, 0.5, 2.0, 9.0])
    a = radial_fourier(g, dim, r)
    b = radial_fourier(g, dim, r, DEFAULT_SPEC.halved())
    assert np.all(np.abs(a - b) <= DEFAULT_SPEC.rel_tol * np.abs(a) + DEFAULT_SPEC.abs_tol)


def test_sobolev_round_trip():
    prof = sobolev_spline(3.0, 1)
    space = RadialFunction(lambda r: prof(r), scale=4.0)
    t = np.linspace(0.5, 4.0, 15)
    np.testing.assert_allclose(radial_fourier(space, 1, t), prof.phi(t), rtol=0, atol=1e-5)


def test_bounded_support_integral():
    # indicator of [0, 1] in d=1: sqrt(2/pi) sin(r)/r
    g = RadialFunction(lambda t: np.ones_like(np.asarray(t, float)), hi=1.0)
    r = np.array([0.5, 3.0, 40.0])
    np.testing.assert_allclose(radial_fourier(g, 1, r), math.sqrt(2 / math.pi) * np.sin(r) / r, atol=1e-12)


def test_input_validation():
    with pytest.raises(ValueError):
        radial_fourier(gauss, 0, 1.0)
    with pytest.raises(ValueError):
        radial_fourier(gauss, 1, -1.0)
    with pytest.raises(ValueError):
        radial_fourier(gauss, 1, 1e-300)
    with pytest.raises(ValueError):
        HankelSpec(panel_width=0.8)
    with pytest.raises(ValueError):
        RadialFunction(gauss, lo=2.0, hi=1.0)


def test_nan_profile_is_rejected():
    with pytest.raises((ValueError, QuadratureError)):
        radial_fourier(lambda t: np.full_like(np.asarray(t, float), np.nan), 1, 1.0)


def test_loglog_slope_exact_power():
    x = np.geomspace(1, 100, 9)
    assert loglog_slope(x, 3 * x ** -2.5) == pytest.approx(-2.5, abs=1e-12)
    with pytest.raises(ValueError):
        loglog_slope([1.0], [1.0])


def test_parse_alphas():
    a = parse_alphas("1:64:log")
    assert a[0] == 1 and a[-1] == pytest.approx(64) and len(a) == 13
    np.testing.assert_array_equal(parse_alphas("1,2,4"), [1, 2, 4])
    assert len(parse_alphas("1:5:lin")) == 5


# --- oscillatory decay -----------------------------------------------------

K2 = make_kernel("K2")


def tail_profile(beta=4.0, scale=2.0):
    return RadialFunction(lambda t: (1 - K2.kappa(np.asarray(t) / scale)) * (1 + np.asarray(t) ** 2) ** (-beta / 2),
                          lo=0.0, scale=2.0, knots=(0.5 * scale, scale))


def origin_profile(scale=2.0):
    return RadialFunction(lambda t: K2.kappa(np.asarray(t) / scale), hi=2.0, knots=(0.5 * scale,))


ALPHAS = np.geomspace(1, 64, 13)


def test_tail_decay_n2_d1():
    fit = decay_check(tail_profile(), 1, "tail", 2, ALPHAS)
    assert fit.slope <= -1.75 and fit.contract_ok


def test_origin_decay_d2():
    fit = decay_check(origin_profile(), 2, "origin", 3, ALPHAS)
    assert fit.slope <= -2.75


def test_origin_decay_d1_endpoint_rate():
    # for d = 1 the t = 0 endpoint of t f(t) cos(alpha t) contributes
    # -alpha^{-2}, so the integral decays like alpha^{-5/2}
    alphas = np.geomspace(16, 256, 9)
    fit = decay_check(origin_profile(), 1, "origin", 3, alphas)
    assert fit.slope == pytest.approx(-2.5, abs=0.05)
    lead = math.sqrt(2 / (math.pi * alphas[-1])) / alphas[-1] ** 2
    assert fit.values[-1] == pytest.approx(lead, rel=1e-3)


def test_decay_baseline_at_alpha_one():
    f = tail_profile()
    fit = decay_check(f, 1, "tail", 2, [1.0, 2.0])
    ref, _ = integrate.quad(lambda t: float(f(t)), 0.5, np.inf, weight="cos", wvar=1.0, epsabs=1e-14)
    assert fit.values[0] == pytest.approx(math.sqrt(2 / math.pi) * abs(ref), abs=1e-8)


def test_decay_slope_stable_under_truncation():
    base = decay_check(tail_profile(), 1, "tail", 2, ALPHAS)
    longer = decay_check(tail_profile(), 1, "tail", 2, ALPHAS, spec=HankelSpec(abs_tol=1e-12))
    assert abs(base.slope - longer.slope) <= 0.05


def test_decay_hypotheses_are_checked():
    with pytest.raises(ValueError):
        decay_check(gauss, 1, "tail", 2, ALPHAS)
    with pytest.raises(ValueError):
        decay_check(lambda t: np.exp(-np.asarray(t)), 1, "origin", 3, ALPHAS)
    with pytest.raises(ValueError):
        decay_check(tail_profile(), 1, "sideways", 2, ALPHAS)
    with pytest.raises(ValueError):
        decay_check(tail_profile(), 1, "tail", 2, [0.5, 2.0])
