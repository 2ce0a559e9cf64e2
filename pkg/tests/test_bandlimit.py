import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from rbfbern import bandlimit as bl
from rbfbern import network as nw
from rbfbern.geometry import Box, gen_quasi_uniform, separation_radius
from rbfbern.hankel import loglog_slope
from rbfbern.kernels import make_kernel
from rbfbern.rbf import l_d, sobolev_spline
from rbfbern.stability import sample_family

import oracles

SOB = sobolev_spline(3.0, 1)
K2 = make_kernel("K2")


def periodic_modes(modes, n=256, h=0.05):
    """One period of ``sum c cos(w x)`` with ``w`` on the DFT lattice."""
    x = np.arange(n) * h
    period = n * h
    vals = sum(c * np.cos(2 * np.pi * m * x / period) for m, c in modes)
    return vals, 2 * np.pi / period


def sobolev_net(q0=0.125, seed=0):
    ps = gen_quasi_uniform(Box((0.0,), (2.0,)), q0)
    a = np.random.default_rng(seed).choice([-1.0, 1.0], len(ps))
    return nw.RBFNetwork(ps, a, SOB)


def sampled(net):
    q = separation_radius(net.centers)
    return nw.sample_to_grid(net, q / 8, nw.decay_radius(SOB, 1e-8)), q


# --- the low-pass multiplier -----------------------------------------------

def test_identity_on_inner_band():
    vals, dw = periodic_modes([(1, 1.0), (3, -0.5), (4, 2.0)])
    sigma1 = 4.0
    assert 4 * dw <= sigma1 / 2
    np.testing.assert_allclose(bl.bandlimit_values(vals, 0.05, K2, sigma1), vals, rtol=0, atol=1e-10)


def test_spectrum_vanishes_beyond_sigma1():
    vals = np.random.default_rng(0).standard_normal(512)
    sigma1 = 5.0
    out = bl.bandlimit_values(vals, 0.05, K2, sigma1)
    spec = np.abs(np.fft.rfft(out))
    w = 2 * np.pi * np.fft.rfftfreq(512, 0.05)
    assert np.all(spec[w >= sigma1] <= 1e-13 * spec.max())


def test_gaussian_against_naive_dft():
    x = np.arange(-8, 8, 0.1)
    fld = nw.GridField((-8.0,), 0.1, np.exp(-x ** 2 / 2))
    sigma1 = 2.0
    out = bl.bandlimit_field(fld, K2, sigma1)
    ref = oracles.naive_dft_multiplier(fld.values, 0.1, lambda w: K2.kappa(w / sigma1))
    np.testing.assert_allclose(out.values, ref, rtol=0, atol=1e-10)


def test_idempotent_on_inner_band():
    vals, _ = periodic_modes([(2, 1.0), (4, 0.3)])
    once = bl.bandlimit_values(vals, 0.05, K2, 4.0)
    twice = bl.bandlimit_values(once, 0.05, K2, 4.0)
    assert np.max(np.abs(twice - once)) < 1e-10


def test_bandlimit_validation():
    with pytest.raises(ValueError, match="refine grid"):
        bl.bandlimit_values(np.zeros(16), 0.5, K2, 10.0)
    with pytest.raises(ValueError):
        bl.bandlimit_values(np.zeros(16), 0.05, make_kernel("K1"), 2.0)


# --- error kernel ----------------------------------------------------------

def test_error_kernel_origin_scaling():
    vals = [bl.error_kernel(SOB, K2, s, 1, 1, 0.0) * s ** (3 - 1 - 1) for s in (4.0, 8.0, 16.0, 32.0)]
    assert max(vals) <= 2 * min(vals)


def test_error_kernel_tail_slope():
    r = np.geomspace(2, 256, 400)
    e = bl.error_kernel(SOB, K2, 4.0, 1, 1, r)
    edges = np.geomspace(2, 256, 8)
    env = [e[(r >= a) & (r <= b)].max() for a, b in zip(edges[:-1], edges[1:])]
    centres = [math.sqrt(a * b) for a, b in zip(edges[:-1], edges[1:])]
    assert loglog_slope(centres, env) <= -(-0.5 + l_d(1)) + 0.3


def test_error_kernel_mass():
    consts = []
    for s in (4.0, 8.0, 16.0, 32.0):
        # E is a function of sigma1 r up to slowly varying factors
        r = np.linspace(0, 400 / s, 4001)
        mass = 2 * integrate.simpson(bl.error_kernel(SOB, K2, s, 1, 1, r), x=r)
        consts.append(mass * s ** (3 - 1))
    assert max(consts) <= 2 * min(consts)


def test_error_kernel_against_grid_surrogate():
    sigma1, k = 4.0, 1.0
    prod = lambda t: (1 - K2.kappa(t / sigma1)) * (1 + t * t) ** ((k - 3) / 2)
    r = np.array([0.5, 1.0, 2.0, 4.0])
    ref = np.abs(oracles.grid_fourier_1d(prod, r, half_width=1000 * math.pi, n=1 << 17))
    np.testing.assert_allclose(bl.error_kernel(SOB, K2, sigma1, k, 1, r), ref, rtol=0, atol=1e-4)


def test_error_kernel_order_check():
    with pytest.raises(ValueError, match="k < beta - d"):
        bl.error_kernel(SOB, K2, 4.0, 2.0, 1, 0.0)


# --- Bernstein lemma chain -------------------------------------------------

@pytest.mark.parametrize("m0", [3, 5])
def test_single_mode_step_ratio(m0):
    vals, dw = periodic_modes([(m0, 1.0)])
    q = 1 / 4.0
    chk = bl.bl_bernstein_values(vals[:, None], 0.05, q, K2, 1, 2, 1, periodic=True)
    w0 = m0 * dw
    # any w0 < sigma1 survives the multiplier, and one mode has one frequency
    assert w0 < 4.0
    assert chk.step_ratios[0] == pytest.approx(math.sqrt(1 + w0 ** 2) / 4.0, rel=1e-12)


def test_k0_chain_is_empty():
    chk = bl.bl_bernstein_check(sobolev_net(), K2, 0, 2)
    assert chk.step_ratios.size == 0 and chk.max_step_ratio == 0.0
    assert 0 < chk.corollary_ratio <= 1.0 + 1e-12


def test_step_ratio_bounded_across_levels():
    steps = [bl.bl_bernstein_check(sobolev_net(2.0 ** -j), K2, 1, 2).max_step_ratio for j in (2, 3, 4)]
    # bounded above uniformly; the ratio falls as the field's spectrum sits
    # at fixed low frequencies while sigma1 grows
    assert max(steps) <= 1.0
    assert all(b <= 2 * a for a, b in zip(steps, steps[1:]))


def test_bernstein_ratio_k0_is_one():
    assert bl.bernstein_ratio(sobolev_net(), 0, 2) == 1.0
    assert bl.bernstein_ratio(sobolev_net(), 0, math.inf) == 1.0


def test_bernstein_ratio_order_check():
    with pytest.raises(ValueError):
        bl.bernstein_ratio(sobolev_net(), 2, 2)


@pytest.mark.parametrize("p", [2, math.inf])
def test_bernstein_ratio_bounded(p):
    vals = []
    for j in (2, 3, 4):
        ps = gen_quasi_uniform(Box((0.0,), (2.0,)), 2.0 ** -j)
        fam = sample_family(ps, SOB, 4, j)
        vals.append(float(bl.bernstein_ratios(fam.values, fam.spacing, fam.q, 1, p, 1).max()))
    assert max(vals) <= 2.5 * min(vals)


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 1000), p=st.sampled_from([1.0, 2.0, math.inf]), k=st.sampled_from([0.5, 1.0, 1.5]))
def test_triangle_inequality(seed, p, k):
    fld, q = sampled(sobolev_net(0.25, seed))
    spec = nw.NormSpec(k, p)
    smooth = bl.bandlimit_field(fld, K2, 1 / q)
    rest = fld.with_values(fld.values - smooth.values)
    whole = nw.sobolev_norm(fld, spec)
    parts = nw.sobolev_norm(smooth, spec, tail_tol=1e-3) + nw.sobolev_norm(rest, spec, tail_tol=1e-3)
    assert whole <= parts * (1 + 1e-12)


def test_report_fields():
    ps = gen_quasi_uniform(Box((0.0,), (2.0,)), 0.25)
    fam = sample_family(ps, SOB, 4, 0)
    rep = bl.bandlimit_report(fam, K2, 1, 2, 1)
    assert rep.sigma1 == 1 / fam.q
    assert all(v >= 0 and math.isfinite(v) for v in (rep.bl_norm_ratio, rep.approx_ratio, rep.bernstein_ratio))
    with pytest.raises(ValueError):
        bl.BandlimitReport(1.0, -1.0, 0.0, 0.0)


# --- approximation rate ----------------------------------------------------

def levels(n):
    return [gen_quasi_uniform(Box((0.0,), (2.0,)), 2.0 ** -j) for j in range(2, 2 + n)]


def test_approx_rate_needs_three_levels():
    with pytest.raises(ValueError, match="at least 3"):
        bl.approx_rate_sweep(levels(1), SOB, K2, 1, 2)
    with pytest.raises(ValueError):
        bl.approx_rate_sweep(levels(2), SOB, K2, 1, 2)


def test_approx_rate_k1_p2():
    fit = bl.approx_rate_sweep(levels(3), SOB, K2, 1, 2, trials=4)
    assert fit.target == pytest.approx(1.5)
    assert fit.ok
