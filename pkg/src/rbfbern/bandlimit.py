"""Band-limited approximation of RBF networks and Bernstein-type ratios.

A low-pass kernel ``K`` (profile 1 on ``[0, 1/2]``, 0 on ``[1, inf)``) at
bandwidth ``sigma1 = 1/q`` splits a network ``g`` into a band-limited part
``g * K_sigma1`` and a remainder whose Bessel-potential norm is small in ``q``.
Both parts are computed on the sampling grid with the exact DFT multiplier.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import network as nw
from .geometry import PointSet, separation_radius
from .hankel import HankelSpec, RadialFunction, loglog_slope, radial_fourier
from .kernels import K2, KernelProfile, scaled
from .rbf import RadialProfile
from .stability import SampledFamily, sample_family


def _check_k2(kp: KernelProfile):
    if kp.kind != K2:
        raise ValueError("band-limiting needs a K2 kernel")


def _check_order(k: float, profile: RadialProfile | None, dim: int):
    if profile is not None and not k < profile.beta - dim:
        raise ValueError(f"k = {k} violates k < beta - d = {profile.beta - dim}")


def bandlimit_values(values, spacing: float, kp: KernelProfile, sigma1: float, dim: int | None = None):
    """Apply ``kappa(|w| / sigma1)`` to grid values (batch axis last)."""
    _check_k2(kp)
    if sigma1 > nw.nyquist(spacing):
        raise ValueError(f"sigma1 = {sigma1:.4g} exceeds the grid Nyquist frequency: refine grid")
    ks = scaled(kp, sigma1) if sigma1 >= 1 else None
    mult = ks.kappa if ks is not None else (lambda w: kp.kappa(w / sigma1))
    return nw.apply_multiplier(values, spacing, mult, dim)


def bandlimit_field(field: nw.GridField, kp: KernelProfile, sigma1: float) -> nw.GridField:
    return field.with_values(bandlimit_values(field.values, field.spacing, kp, sigma1))


def error_kernel(profile: RadialProfile, kp: KernelProfile, sigma1: float, k: float, dim: int, r,
                 spec: HankelSpec | None = None):
    """``|F[(1 - kappa(t/sigma1)) phi(t) (1+t^2)^{k/2}](r)|``, supported on ``t >= sigma1/2``."""
    _check_k2(kp)
    _check_order(k, profile, dim)
    a, b = kp.glue
    lo = a * sigma1

    def g(t):
        t = np.asarray(t, dtype=float)
        return (1.0 - kp.kappa(t / sigma1)) * profile.phi(t) * (1.0 + t * t) ** (k / 2.0)

    rf = RadialFunction(g, lo=lo, knots=(lo, b * sigma1), scale=max(1.0, b * sigma1))
    return np.abs(radial_fourier(rf, dim, r, spec))


# ---------------------------------------------------------------------------
# ratios on sampled families


@dataclass(frozen=True)
class BLCheck:
    step_ratios: np.ndarray
    max_step_ratio: float
    corollary_ratio: float


def _norms(values, spacing, k, p, dim, tail_tol=nw.DEFAULT_TAIL_TOL):
    return nw.sobolev_norms(values, spacing, nw.NormSpec(k, p), dim, tail_tol)


def bl_bernstein_values(values, spacing: float, q: float, kp: KernelProfile, k: float, p: float,
                        dim: int, periodic: bool = False) -> BLCheck:
    """Lemma chain ``||g_s||_{m,p} / (sigma1 ||g_s||_{m-1,p})`` for ``m = 1..floor(k)``
    and the corollary ratio ``||g_s||_{k,p} q^k / ||g||_p`` (max over the batch).

    ``periodic=True`` skips the boundary-decay checks, for data that is one
    period of a trigonometric polynomial.
    """
    sigma1 = 1.0 / q
    smooth = bandlimit_values(values, spacing, kp, sigma1, dim)
    base = _norms(values, spacing, 0.0, p, dim, tail_tol=math.inf if periodic else nw.DEFAULT_TAIL_TOL)
    # band-limited fields decay like the low-pass kernel; check them loosely
    loose = math.inf if periodic else 1e-3
    prev = _norms(smooth, spacing, 0.0, p, dim, tail_tol=loose)
    steps = []
    for m in range(1, int(math.floor(k)) + 1):
        cur = _norms(smooth, spacing, float(m), p, dim, tail_tol=loose)
        steps.append(float(np.max(cur / (sigma1 * prev))))
        prev = cur
    top = prev if float(k).is_integer() else _norms(smooth, spacing, k, p, dim, tail_tol=loose)
    corollary = float(np.max(top * q ** k / base))
    steps = np.array(steps)
    return BLCheck(steps, float(steps.max()) if steps.size else 0.0, corollary)


def approx_ratios(values, spacing: float, q: float, coeffs: np.ndarray, kp: KernelProfile, k: float,
                  p: float, dim: int) -> np.ndarray:
    """``||g - g * K_sigma1||_{k,p} / ||a||_p`` per batch member."""
    rem = np.asarray(values) - bandlimit_values(values, spacing, kp, 1.0 / q, dim)
    num = _norms(rem, spacing, k, p, dim, tail_tol=1e-3)
    den = np.array([nw.coeff_norm(coeffs[:, j], p) for j in range(coeffs.shape[1])])
    return num / den


def bernstein_ratios(values, spacing: float, q: float, k: float, p: float, dim: int) -> np.ndarray:
    """``||g||_{k,p} q^k / ||g||_p`` per batch member; exactly 1 for ``k = 0``."""
    if k == 0:
        return np.ones(np.shape(values)[dim:] or (1,))
    return _norms(values, spacing, k, p, dim) * q ** k / _norms(values, spacing, 0.0, p, dim)


def bernstein_ratio(net: nw.RBFNetwork, k: float, p: float, rule: nw.GridRule | None = None) -> float:
    """``||g||_{k,p} q^k / ||g||_p`` for one network."""
    _check_order(k, net.profile, net.dim)
    rule = rule or nw.GridRule()
    q = separation_radius(net.centers)
    fld = nw.sample_to_grid(net, rule.spacing(q), nw.decay_radius(net.profile, rule.pad_tol))
    vals = fld.values[..., None]
    return float(bernstein_ratios(vals, fld.spacing, q, k, p, net.dim)[0])


def bl_bernstein_check(net: nw.RBFNetwork, kp: KernelProfile, k: float, p: float,
                       rule: nw.GridRule | None = None) -> BLCheck:
    _check_order(k, net.profile, net.dim)
    rule = rule or nw.GridRule()
    q = separation_radius(net.centers)
    fld = nw.sample_to_grid(net, rule.spacing(q), nw.decay_radius(net.profile, rule.pad_tol))
    return bl_bernstein_values(fld.values[..., None], fld.spacing, q, kp, k, p, net.dim)


@dataclass(frozen=True)
class BandlimitReport:
    sigma1: float
    bl_norm_ratio: float
    approx_ratio: float
    bernstein_ratio: float
    max_step_ratio: float = 0.0

    def __post_init__(self):
        vals = (self.bl_norm_ratio, self.approx_ratio, self.bernstein_ratio)
        if not all(math.isfinite(v) and v >= 0 for v in vals):
            raise ValueError("band-limit ratios must be finite and non-negative")


def bandlimit_report(fam: SampledFamily, kp: KernelProfile, k: float, p: float, dim: int) -> BandlimitReport:
    """Maxima over the sampled family of the three ratios at ``sigma1 = 1/q``."""
    bl = bl_bernstein_values(fam.values, fam.spacing, fam.q, kp, k, p, dim)
    appr = approx_ratios(fam.values, fam.spacing, fam.q, fam.coeffs, kp, k, p, dim)
    bern = bernstein_ratios(fam.values, fam.spacing, fam.q, k, p, dim)
    return BandlimitReport(1.0 / fam.q, bl.corollary_ratio, float(appr.max()), float(bern.max()), bl.max_step_ratio)


@dataclass(frozen=True)
class RateFit:
    qs: np.ndarray
    values: np.ndarray
    slope: float
    target: float
    slack: float

    @property
    def ok(self) -> bool:
        return self.slope >= self.target - self.slack


def approx_rate_sweep(levels: Sequence[PointSet], profile: RadialProfile, kp: KernelProfile, k: float,
                      p: float, trials: int = 16, seed: int = 0, rule: nw.GridRule | None = None,
                      slack: float = 0.3) -> RateFit:
    """Fit ``log max ||g - g * K_sigma1||_{k,p} / ||a||_p`` against ``log q``."""
    if len(levels) < 3:
        raise ValueError("a rate fit needs at least 3 levels")
    dim = levels[0].dim
    _check_order(k, profile, dim)
    qs, vals = [], []
    for lev, ps in enumerate(levels):
        fam = sample_family(ps, profile, trials, seed + lev, rule)
        qs.append(fam.q)
        vals.append(float(approx_ratios(fam.values, fam.spacing, fam.q, fam.coeffs, kp, k, p, dim).max()))
    spec = nw.NormSpec(k, p)
    target = profile.beta - k - dim / spec.p_conj if not math.isinf(spec.p_conj) else profile.beta - k
    qs, vals = np.array(qs), np.array(vals)
    return RateFit(qs, vals, loglog_slope(qs, vals), target, slack)
