"""Admissible RBF profiles and a sampled admissibility checker.

A profile is described on the Fourier side, ``Phi^(w) = phi(|w|)``. The order
``beta`` enters through ``h(t) = phi(t) (1 + t^2)^{beta/2}``; a profile is
admissible when ``h(sigma x)`` is bounded above and below and its first
``l_d = ceil((d+3)/2)`` derivatives in ``x`` stay bounded, for ``sigma >= 1``
and ``x >= 1/2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from . import specfun
from .hankel import HankelSpec, RadialFunction, radial_fourier

ArrayFn = Callable[[np.ndarray], np.ndarray]
DerivFn = Callable[[int, np.ndarray], np.ndarray]


def l_d(dim: int) -> int:
    return math.ceil((dim + 3) / 2)


def _power_derivative(a: float, j: int, t: np.ndarray) -> np.ndarray:
    """``d^j/dt^j (1 + t^2)^a`` via ``P_{j+1} = P_j'(1+t^2) + 2(a-j) t P_j``."""
    p = Polynomial([1.0])
    one_plus = Polynomial([1.0, 0.0, 1.0])
    tpoly = Polynomial([0.0, 1.0])
    for i in range(j):
        p = p.deriv() * one_plus + 2.0 * (a - i) * tpoly * p
    return p(t) * (1.0 + t * t) ** (a - j)


@dataclass(frozen=True, eq=False)
class RadialProfile:
    name: str
    beta: float
    dim: int
    phi: ArrayFn
    phi_derivative: Optional[DerivFn] = None
    space_eval: Optional[ArrayFn] = None
    generalized: bool = False
    h_exact: Optional[ArrayFn] = None
    h_derivative_exact: Optional[DerivFn] = None
    params: dict = field(default_factory=dict)

    @property
    def l_d(self) -> int:
        return l_d(self.dim)

    def h(self, t):
        t = np.asarray(t, dtype=float)
        if self.h_exact is not None:
            return self.h_exact(t)
        return self.phi(t) * (1.0 + t * t) ** (self.beta / 2.0)

    def h_derivative(self, order: int, t):
        """``h^{(order)}(t)``: analytic when available, else Leibniz on analytic
        ``phi`` derivatives, else a 5-point central difference (step ``1e-3 t``)."""
        t = np.asarray(t, dtype=float)
        if order == 0:
            return self.h(t)
        if self.h_derivative_exact is not None:
            return self.h_derivative_exact(order, t)
        if self.phi_derivative is not None:
            total = np.zeros_like(t)
            for i in range(order + 1):
                w = _power_derivative(self.beta / 2.0, i, t)
                total = total + math.comb(order, i) * w * self.phi_derivative(order - i, t)
            return total
        return finite_difference(self.h, order, t)

    def radial(self) -> RadialFunction:
        if self.generalized:
            raise ValueError(f"{self.name} has a non-integrable transform at the origin")
        return RadialFunction(self.phi, lo=0.0, scale=1.0)

    def __call__(self, r):
        """Space-side value ``Phi(x)`` for ``|x| = r``."""
        if self.space_eval is None:
            raise ValueError(f"{self.name} has no space-side evaluation")
        return self.space_eval(np.asarray(r, dtype=float))


_FD_STENCILS = {
    1: (np.array([1.0, -8.0, 0.0, 8.0, -1.0]), 12.0),
    2: (np.array([-1.0, 16.0, -30.0, 16.0, -1.0]), 12.0),
    3: (np.array([-1.0, 2.0, 0.0, -2.0, 1.0]), 2.0),
    4: (np.array([1.0, -4.0, 6.0, -4.0, 1.0]), 1.0),
}


def finite_difference(f: ArrayFn, order: int, t: np.ndarray, rel_step: float = 1e-3) -> np.ndarray:
    if order not in _FD_STENCILS:
        raise ValueError("5-point stencils cover derivative orders 1..4")
    coeffs, denom = _FD_STENCILS[order]
    step = rel_step * np.maximum(np.abs(t), 1e-8)
    offsets = np.arange(-2, 3)
    vals = sum(c * f(t + k * step) for c, k in zip(coeffs, offsets) if c != 0.0)
    return vals / (denom * step ** order)


# ---------------------------------------------------------------------------
# Sobolev splines


@lru_cache(maxsize=None)
def _sobolev_constant(beta: float, dim: int) -> float:
    # normalise the closed form r^nu K_nu(r) against the Fourier integral at r = 1
    nu = (beta - dim) / 2.0
    target = radial_fourier(lambda t: (1.0 + t * t) ** (-beta / 2.0), dim, 1.0, HankelSpec(abs_tol=1e-13))
    return target / specfun.bessel_k(nu, 1.0)


def sobolev_spline(beta: float, dim: int) -> RadialProfile:
    """Sobolev spline (Matern kernel) with ``phi(t) = (1 + t^2)^{-beta/2}``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not beta > dim:
        raise ValueError("Sobolev splines need beta > d")
    nu = (beta - dim) / 2.0
    const = _sobolev_constant(float(beta), int(dim))
    origin_value = const * 2.0 ** (nu - 1.0) * math.gamma(nu)

    def phi(t):
        return (1.0 + np.asarray(t) ** 2) ** (-beta / 2.0)

    def phi_derivative(j, t):
        return _power_derivative(-beta / 2.0, j, np.asarray(t, dtype=float))

    def space(r):
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, origin_value)
        pos = r > 0
        rp = r[pos]
        out[pos] = const * rp ** nu * specfun.bessel_k(nu, rp)
        return out

    return RadialProfile(
        name="sobolev",
        beta=float(beta),
        dim=dim,
        phi=phi,
        phi_derivative=phi_derivative,
        space_eval=space,
        h_exact=lambda t: np.ones_like(np.asarray(t, dtype=float)),
        h_derivative_exact=lambda j, t: np.zeros_like(np.asarray(t, dtype=float)),
        params={"normalization": const},
    )


# ---------------------------------------------------------------------------
# thin-plate splines


def _falling(a: float, n: int) -> float:
    out = 1.0
    for i in range(n):
        out *= a - i
    return out


def thin_plate_spline(m: int, dim: int, const: float = 1.0) -> RadialProfile:
    """Thin-plate spline of order ``2m`` with ``phi(t) = C t^{-2m}``.

    The transform is generalized (not integrable at 0); only windowed
    integrals that vanish near the origin may consume it.
    """
    if int(m) != m or not 2 * m > dim:
        raise ValueError("thin-plate splines need an integer m > d/2")
    if const <= 0:
        raise ValueError("normalization must be positive")
    m = int(m)

    def phi(t):
        return const * np.asarray(t, dtype=float) ** (-2 * m)

    def phi_derivative(j, t):
        return const * _falling(-2 * m, j) * np.asarray(t, dtype=float) ** (-2 * m - j)

    def h_exact(t):
        return const * (1.0 + np.asarray(t, dtype=float) ** -2) ** m

    def h_derivative_exact(j, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for i in range(1, m + 1):
            total = total + math.comb(m, i) * _falling(-2 * i, j) * t ** (-2 * i - j)
        return const * total

    def space(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0
        if dim % 2:
            out[pos] = r[pos] ** (2 * m - dim)
        else:
            out[pos] = r[pos] ** (2 * m - dim) * np.log(r[pos])
        return out

    return RadialProfile(
        name="thin_plate",
        beta=float(2 * m),
        dim=dim,
        phi=phi,
        phi_derivative=phi_derivative,
        space_eval=space,
        generalized=True,
        h_exact=h_exact,
        h_derivative_exact=h_derivative_exact,
        params={"m": m, "normalization": const},
    )


def gaussian_profile(beta: float, dim: int) -> RadialProfile:
    """``phi(t) = exp(-t^2)`` with a declared order; never admissible."""

    def space(r):
        return 2.0 ** (-dim / 2.0) * np.exp(-np.asarray(r, dtype=float) ** 2 / 4.0)

    return RadialProfile(
        name="gaussian",
        beta=float(beta),
        dim=dim,
        phi=lambda t: np.exp(-np.asarray(t, dtype=float) ** 2),
        space_eval=space,
    )


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    c1: float
    c2: float
    l_d: int
    max_deriv_bound: float
    passed: bool

    def as_dict(self) -> dict:
        return {
            "c1": self.c1,
            "c2": self.c2,
            "l_d": self.l_d,
            "max_deriv_bound": self.max_deriv_bound,
            "pass": self.passed,
        }


DEFAULT_SIGMA_GRID = tuple(np.geomspace(1.0, 1e3, 31))
DEFAULT_X_GRID = tuple(np.geomspace(0.5, 1e2, 41))


def admissibility_check(profile: RadialProfile, sigma_grid=None, x_grid=None) -> AdmissibilityReport:
    sig = np.asarray(DEFAULT_SIGMA_GRID if sigma_grid is None else sigma_grid, dtype=float)
    xs = np.asarray(DEFAULT_X_GRID if x_grid is None else x_grid, dtype=float)
    if sig.size == 0 or xs.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(sig < 1.0) or np.any(xs < 0.5):
        raise ValueError("grids must satisfy sigma >= 1 and x >= 1/2")
    s, x = np.meshgrid(sig, xs, indexing="ij")
    t = s * x
    h = np.asarray(profile.h(t), dtype=float)
    if not np.all(np.isfinite(h)):
        raise ValueError("profile undefined at a grid point")
    ld = profile.l_d
    worst = 0.0
    for order in range(1, ld + 1):
        # d^l/dx^l of h(sigma x) = sigma^l h^{(l)}(sigma x)
        deriv = s ** order * np.asarray(profile.h_derivative(order, t), dtype=float)
        worst = max(worst, float(np.max(np.abs(deriv))))
    c1, c2 = float(h.min()), float(h.max())
    passed = c1 > 0.0 and math.isfinite(c2) and math.isfinite(worst)
    return AdmissibilityReport(c1=c1, c2=c2, l_d=ld, max_deriv_bound=worst, passed=passed)


def make_profile(family: str, dim: int, beta: float | None = None, m: int | None = None) -> RadialProfile:
    family = family.lower()
    if family == "sobolev":
        return sobolev_spline(beta if beta is not None else dim + 2.0, dim)
    if family in ("tps", "thin_plate", "thin-plate"):
        return thin_plate_spline(m if m is not None else dim // 2 + 1, dim)
    if family == "gaussian":
        return gaussian_profile(beta if beta is not None else dim + 2.0, dim)
    raise ValueError(f"unknown RBF family {family!r}")
