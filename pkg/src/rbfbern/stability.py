"""Convolution interpolation matrices and stability of RBF networks.

For a kernel ``K`` whose Fourier profile vanishes on ``[0, 1]`` the matrix
``(A_sigma)_ij = K_sigma * Phi(xi_i - xi_j)`` becomes diagonally dominant once
``sigma q`` is large enough. Dominance certifies invertibility with an
explicit bound on ``||A^{-1}||_1``, which in turn controls the coefficients of
a network by its values.

Convolution is normalised as a pure Fourier multiplier, ``(K * f)^ = K^ f^``,
so ``K_sigma * Phi`` is the radial transform of ``kappa(t / sigma) phi(t)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from . import network as nw
from .geometry import PointSet, separation_radius
from .hankel import HankelSpec, RadialFunction, radial_fourier
from .kernels import K1, KernelProfile, scaled
from .rbf import RadialProfile

MAX_DYADIC_STEPS = 20
MEMO_REL_TOL = 1e-12
DOMINANCE_TARGET = 0.5


def _check_k1(kp: KernelProfile):
    if kp.kind != K1:
        raise ValueError("the interpolation matrix needs a K1 kernel")


def convolved_profile(profile: RadialProfile, kp: KernelProfile, sigma: float) -> RadialFunction:
    _check_k1(kp)
    ks = scaled(kp, sigma)
    lo, hi = ks.support
    return RadialFunction(lambda t: ks.kappa(t) * profile.phi(t), lo=lo, hi=hi, knots=ks.knots)


def convolved_rbf(profile: RadialProfile, kp: KernelProfile, sigma: float, dim: int, r,
                  spec: HankelSpec | None = None):
    """``K_sigma * Phi`` at radius ``r`` (scalar or array).

    Generalized profiles are accepted because the integrand lives on
    ``t >= sigma``.
    """
    return radial_fourier(convolved_profile(profile, kp, sigma), dim, r, spec)


@dataclass(frozen=True, eq=False)
class InterpolationMatrix:
    entries: np.ndarray
    sigma: float
    diag: float
    offdiag_colsum_max: float

    @property
    def dominance_ratio(self) -> float:
        return self.offdiag_colsum_max / abs(self.diag)


def _bucket_distances(dist: np.ndarray, diameter: float):
    """Group distances that agree to ``MEMO_REL_TOL * diameter``."""
    tol = MEMO_REL_TOL * max(diameter, 1e-300)
    order = np.argsort(dist, kind="stable")
    sd = dist[order]
    starts = np.concatenate([[True], np.diff(sd) > tol])
    labels_sorted = np.cumsum(starts) - 1
    reps = sd[starts]
    labels = np.empty_like(labels_sorted)
    labels[order] = labels_sorted
    return reps, labels


def assemble_matrix(ps: PointSet, profile: RadialProfile, kp: KernelProfile, sigma: float,
                    spec: HankelSpec | None = None) -> InterpolationMatrix:
    """``A_sigma`` over the centers, one quadrature per distinct distance."""
    _check_k1(kp)
    n = len(ps)
    diag = float(convolved_rbf(profile, kp, sigma, ps.dim, 0.0, spec))
    if n == 1:
        return InterpolationMatrix(np.array([[diag]]), sigma, diag, 0.0)
    dist = pdist(ps.points)
    reps, labels = _bucket_distances(dist, ps.domain.diameter)
    vals = np.asarray(convolved_rbf(profile, kp, sigma, ps.dim, reps, spec))
    mat = squareform(vals[labels])
    np.fill_diagonal(mat, diag)
    if not np.all(np.isfinite(mat)):
        raise ValueError("non-finite matrix entry")
    off = np.abs(mat).sum(axis=0) - abs(diag)
    return InterpolationMatrix(mat, float(sigma), diag, float(off.max()))


@dataclass(frozen=True, eq=False)
class SigmaSearch:
    sigma0: float
    m_hat: float
    q: float
    matrix: InterpolationMatrix
    history: tuple[tuple[float, float], ...] = ()


def find_sigma0(ps: PointSet, profile: RadialProfile, kp: KernelProfile,
                spec: HankelSpec | None = None) -> SigmaSearch:
    """First ``sigma = 2^j / q`` (with ``sigma >= 1``) giving dominance ratio <= 1/2."""
    q = separation_radius(ps)
    history = []
    for j in range(MAX_DYADIC_STEPS + 1):
        sigma = 2.0 ** j / q
        if sigma < 1.0:
            continue
        mat = assemble_matrix(ps, profile, kp, sigma, spec)
        history.append((sigma, mat.dominance_ratio))
        if mat.dominance_ratio <= DOMINANCE_TARGET:
            return SigmaSearch(sigma, sigma * q, q, mat, tuple(history))
    trail = ", ".join(f"sigma={s:.4g}: {r:.4g}" for s, r in history[-4:])
    raise RuntimeError(f"dominance not reached after {MAX_DYADIC_STEPS} dyadic steps ({trail})")


@dataclass(frozen=True)
class InverseNormCheck:
    dominance_ratio: float
    inv_norm_bound: float
    inv_norm_actual: float

    @property
    def ok(self) -> bool:
        # equality is attained for 2x2 and diagonal matrices
        return self.inv_norm_actual <= self.inv_norm_bound * (1.0 + 1e-12)


def inverse_norm_check(a) -> InverseNormCheck:
    """Compare ``||A^{-1}||_1`` with ``||D^{-1}||_1 / (1 - ||D^{-1} F||_1)``."""
    mat = a.entries if isinstance(a, InterpolationMatrix) else np.asarray(a, dtype=float)
    d = np.diag(mat)
    if np.any(d == 0):
        raise ValueError("zero diagonal entry")
    off = mat - np.diag(d)
    ratio = float(np.max(np.abs(off / d[:, None]).sum(axis=0)))
    if ratio >= 1.0:
        raise ValueError(f"matrix is not diagonally dominant (ratio {ratio:.4g})")
    bound = float(np.max(1.0 / np.abs(d))) / (1.0 - ratio)
    try:
        inv = np.linalg.inv(mat)
    except np.linalg.LinAlgError as exc:
        raise ValueError("dominant matrix is numerically singular; quadrature is inconsistent") from exc
    actual = float(np.max(np.abs(inv).sum(axis=0)))
    return InverseNormCheck(ratio, bound, actual)


# ---------------------------------------------------------------------------
# stability ratio


def alternating_coeffs(ps: PointSet, q: float | None = None) -> np.ndarray:
    """``(-1)^{sum_i round((x_i - min_i) / (2q))}``: the checkerboard on a grid."""
    q = separation_radius(ps) if q is None else q
    steps = np.round((ps.points - ps.points.min(axis=0)) / (2.0 * q)).astype(np.int64)
    return np.where(steps.sum(axis=1) % 2 == 0, 1.0, -1.0)


def smooth_window(ps: PointSet) -> np.ndarray:
    """C^inf bump ``prod_i e^4 exp(-1/(s_i (1 - s_i)))`` over the domain box."""
    lo, hi = np.asarray(ps.domain.lo), np.asarray(ps.domain.hi)
    s = (ps.points - lo) / (hi - lo)
    inside = np.all((s > 0) & (s < 1), axis=1)
    out = np.zeros(len(ps))
    si = s[inside]
    out[inside] = np.exp(np.sum(4.0 - 1.0 / (si * (1.0 - si)), axis=1))
    return out


def windowed_alternating_coeffs(ps: PointSet, q: float | None = None) -> np.ndarray:
    """Alternating pattern tapered by :func:`smooth_window`.

    The plain pattern leaves an O(1) low-frequency field near the domain edges
    (the alternating sum does not cancel there); the taper removes it so the
    network is concentrated near the highest grid frequency.
    """
    return alternating_coeffs(ps, q) * smooth_window(ps)


def extremal_coeffs(design: np.ndarray) -> np.ndarray:
    """Smallest right singular vector of the grid design matrix.

    For ``p = 2`` it attains the grid supremum of ``||a||_2 / ||g||_2``; for
    other ``p`` it is a strong candidate. Sign fixed so the largest entry is
    positive.
    """
    _, _, vt = np.linalg.svd(design, full_matrices=False)
    v = vt[-1]
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def coefficient_trials(ps: PointSet, trials: int, seed: int, q: float | None = None,
                       design: np.ndarray | None = None) -> np.ndarray:
    """Candidate coefficient vectors as columns.

    Deterministic candidates come first: the alternating pattern, its
    windowed version (when nonzero) and, if ``design`` is given, the extremal
    singular vector. Then ``trials`` seeded draws follow (even draws random
    signs, odd draws standard normal).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    n = len(ps)
    cols = [alternating_coeffs(ps, q)]
    win = windowed_alternating_coeffs(ps, q)
    if np.any(win != 0):
        cols.append(win)
    if design is not None and n > 1:
        cols.append(extremal_coeffs(design))
    for t in range(trials):
        if t % 2 == 0:
            cols.append(rng.choice([-1.0, 1.0], size=n))
        else:
            cols.append(rng.standard_normal(n))
    return np.stack(cols, axis=1)


@dataclass(frozen=True)
class RatioEstimate:
    ratio: float
    ratios: np.ndarray
    argmax: int


@dataclass(frozen=True, eq=False)
class SampledFamily:
    """Networks with shared centers sampled on one padded grid."""

    layout: nw.GridLayout
    coeffs: np.ndarray
    values: np.ndarray
    q: float

    @property
    def spacing(self) -> float:
        return self.layout.spacing


def sample_family(ps: PointSet, profile: RadialProfile, trials: int, seed: int,
                  rule: nw.GridRule | None = None, coeffs: np.ndarray | None = None) -> SampledFamily:
    """Sample the candidate family of :func:`coefficient_trials` (or ``coeffs``)."""
    if profile.generalized:
        raise ValueError("networks need an evaluable profile")
    rule = rule or nw.GridRule()
    q = separation_radius(ps) if len(ps) > 1 else ps.domain.diameter / 2.0
    layout = nw.grid_layout(ps.domain, rule.spacing(q), nw.decay_radius(profile, rule.pad_tol))
    design = nw.design_matrix(layout, ps, profile)
    if coeffs is None:
        a = coefficient_trials(ps, trials, seed, q, design)
    else:
        a = np.asarray(coeffs, dtype=float).reshape(len(ps), -1)
    vals = (design @ a).reshape(layout.shape + (a.shape[1],))
    return SampledFamily(layout, a, vals, q)


def stability_ratio_estimate(ps: PointSet, profile: RadialProfile, p: float, trials: int, seed: int,
                             rule: nw.GridRule | None = None, coeffs: np.ndarray | None = None,
                             family: SampledFamily | None = None) -> RatioEstimate:
    """Empirical ``max ||a||_p / ||g||_p`` over the candidate family.

    This is a lower bound of the true supremum over the network space.
    """
    fam = family or sample_family(ps, profile, trials, seed, rule, coeffs)
    gnorm = nw.sobolev_norms(fam.values, fam.spacing, nw.NormSpec(0.0, p), ps.dim)
    anorm = np.array([nw.coeff_norm(fam.coeffs[:, j], p) for j in range(fam.coeffs.shape[1])])
    ratios = anorm / gnorm
    i = int(np.argmax(ratios))
    return RatioEstimate(float(ratios[i]), ratios, i)


# ---------------------------------------------------------------------------
# sampling inequality for K_sigma * f on the centers

# Frozen from calibrate_mz_constant() with the default K1 kernel (observed
# maxima 0.448 for d=1 and d=2), rounded up; no analytic value is available.
MZ_CONSTANTS = {1: 0.5, 2: 0.5}


@dataclass(frozen=True)
class MZResult:
    discrete_norm: float
    bound_rhs: float
    ok: bool
    constant: float
    calibrated: bool = True


def smoothed_on_centers(field_: nw.GridField, kp: KernelProfile, sigma: float, ps: PointSet) -> np.ndarray:
    """``(K_sigma * f)`` restricted to the centers, computed spectrally."""
    ks = scaled(kp, sigma)
    if ks.support[1] >= nw.nyquist(field_.spacing):
        raise ValueError("kernel band exceeds the grid Nyquist frequency: refine grid")
    return nw.point_values(field_.values, field_.origin, field_.spacing, ps.points, ks.kappa)


def _mz_ratio(field_, kp, ps, p, sigma0, q):
    vals = smoothed_on_centers(field_, kp, sigma0, ps)
    disc = nw.coeff_norm(vals, p)
    fn = nw.lp_norm(field_.values, field_.spacing, p)
    scale = q ** (-ps.dim / p) if not math.isinf(p) else 1.0
    return disc, scale * fn


def mz_check(kp: KernelProfile, ps: PointSet, field_: nw.GridField, p: float, sigma0: float,
             constant: float | None = None) -> MZResult:
    """``||(K_sigma0 * f)|_Y||_p <= C q^{-d/p} ||f||_p`` with a frozen ``C``."""
    _check_k1(kp)
    q = separation_radius(ps)
    if constant is None:
        if ps.dim not in MZ_CONSTANTS:
            raise ValueError(f"no calibrated constant for d={ps.dim}; pass constant=")
        constant = MZ_CONSTANTS[ps.dim]
    disc, base = _mz_ratio(field_, kp, ps, p, sigma0, q)
    rhs = constant * base
    return MZResult(disc, rhs, disc <= rhs * (1.0 + 1e-12), constant)


def calibrate_mz_constant(dim: int, kp: KernelProfile, m_hat: float = 4.0, levels: int = 4,
                          ps_values=(1.0, 2.0, math.inf)) -> float:
    """Largest observed ``||(K * f)|_Y||_p / (q^{-d/p} ||f||_p)`` over a fixed
    calibration family: modulated Gaussians on dyadic grids."""
    from .geometry import Box, gen_quasi_uniform

    worst = 0.0
    for lev in range(levels):
        spacing = 0.5 / 2 ** lev
        q = spacing / 2.0
        box = Box.cube(0.0, 2.0, dim)
        ps = gen_quasi_uniform(box, spacing)
        sigma0 = m_hat / q
        delta = math.pi / (4.0 * sigma0)
        pad = 8.0
        layout = nw.grid_layout(box, delta, pad)
        x = layout.nodes()
        centre = np.full(dim, 1.0)
        # frequency 2 sigma0 sits at the peak of the scaled K1 profile
        carrier = np.cos(2.0 * sigma0 * (x[:, 0] - centre[0]))
        vals = (np.exp(-np.sum((x - centre) ** 2, axis=1) / 2.0) * carrier).reshape(layout.shape)
        fld = nw.GridField(layout.origin, delta, vals)
        for p in ps_values:
            disc, base = _mz_ratio(fld, kp, ps, p, sigma0, q)
            worst = max(worst, disc / base)
    return worst
