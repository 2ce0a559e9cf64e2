"""Bessel and Gamma functions used by the radial Fourier machinery.

Half-integer orders of J are computed here from the closed forms

    J_{-1/2}(x) = sqrt(2/(pi x)) cos x,    J_{1/2}(x) = sqrt(2/(pi x)) sin x

combined with the three-term recurrence ``J_{v+1} = (2v/x) J_v - J_{v-1}``:

* ``x <= 1``: ascending power series (terms decrease monotonically).
* ``1 < x < v``: Miller's backward recurrence, normalised against whichever
  of the two closed forms has the larger magnitude at ``x``.
* ``x >= v``: forward recurrence from the closed forms (stable there).

Integer orders, the modified Bessel function K and Gamma delegate to
``scipy.special``.
"""
from __future__ import annotations

from dataclasses import dataclass
from numbers import Real

import numpy as np
from scipy import special

MAX_ORDER = 30.0
SERIES_CUTOFF = 1.0


@dataclass(frozen=True)
class BesselOrder:
    """Order ``nu`` stored as the integer ``2 nu`` so half-integers stay exact."""

    two_nu: int

    def __post_init__(self):
        if not isinstance(self.two_nu, (int, np.integer)):
            raise TypeError("two_nu must be an integer")

    @classmethod
    def of(cls, nu) -> "BesselOrder":
        if isinstance(nu, BesselOrder):
            return nu
        two = 2.0 * float(nu)
        if abs(two - round(two)) > 1e-12:
            raise ValueError(f"order {nu} is not an integer or half-integer")
        return cls(int(round(two)))

    @property
    def nu(self) -> float:
        return self.two_nu / 2.0

    @property
    def is_half_integer(self) -> bool:
        return self.two_nu % 2 != 0

    def shifted(self, k: int) -> "BesselOrder":
        return BesselOrder(self.two_nu + 2 * k)


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _series(nu: float, x: np.ndarray, terms: int = 40) -> np.ndarray:
    half = 0.5 * x
    q = -half * half
    out = np.zeros_like(x)
    term = np.exp(nu * np.log(half) - special.gammaln(nu + 1.0))
    for k in range(terms):
        out = out + term
        term = term * q / ((k + 1.0) * (k + 1.0 + nu))
    return out


def _closed_pair(x: np.ndarray):
    amp = np.sqrt(2.0 / (np.pi * x))
    return amp * np.cos(x), amp * np.sin(x)


def _forward(m: int, x: np.ndarray) -> np.ndarray:
    # order m + 1/2 reached from J_{-1/2}, J_{1/2}
    j_prev, j_cur = _closed_pair(x)
    if m == -1:
        return j_prev
    mu = 0.5
    for _ in range(m):
        j_prev, j_cur = j_cur, (2.0 * mu / x) * j_cur - j_prev
        mu += 1.0
    return j_cur


def _miller(m: int, x: np.ndarray) -> np.ndarray:
    top = m + 40 + int(np.ceil(np.max(x)))
    j_up = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    target = np.zeros_like(x)
    mu = top + 0.5
    # walk mu from top+1/2 down to -1/2
    for order in range(top, -1, -1):
        if order == m:
            target = j_cur.copy()
        j_down = (2.0 * mu / x) * j_cur - j_up
        j_up, j_cur = j_cur, j_down
        mu -= 1.0
        big = np.abs(j_cur) > 1e200
        if np.any(big):
            scale = np.where(big, 1e-200, 1.0)
            j_up *= scale
            j_cur *= scale
            target *= scale
    # j_up is now the raw J_{1/2}, j_cur the raw J_{-1/2}
    true_m, true_p = _closed_pair(x)
    use_plus = np.abs(true_p) >= np.abs(true_m)
    norm = np.where(use_plus, true_p / j_up, true_m / j_cur)
    if m == -1:
        return true_m
    return target * norm


def _half_integer_j(two_nu: int, x: np.ndarray) -> np.ndarray:
    m = (two_nu - 1) // 2
    nu = two_nu / 2.0
    out = np.empty_like(x)
    zero = x == 0.0
    if np.any(zero):
        out[zero] = np.inf if two_nu == -1 else 0.0
    small = (~zero) & (x <= SERIES_CUTOFF)
    if np.any(small):
        out[small] = _series(nu, x[small])
    fwd = (x > SERIES_CUTOFF) & (x >= nu)
    if np.any(fwd):
        out[fwd] = _forward(m, x[fwd])
    mid = (x > SERIES_CUTOFF) & (x < nu)
    if np.any(mid):
        out[mid] = _miller(m, x[mid])
    return out


def bessel_j(order, x):
    """Bessel function of the first kind ``J_nu(x)`` for ``x >= 0``.

    ``order`` is a :class:`BesselOrder` or a number that is an integer or a
    half-integer; ``-1/2 <= nu <= 30``. Accepts scalars or arrays.
    """
    order = BesselOrder.of(order)
    if order.two_nu < -1 or order.nu > MAX_ORDER:
        raise ValueError(f"unsupported Bessel order {order.nu}")
    arr, scalar = _as_array(x)
    if np.any(arr < 0) or np.any(np.isnan(arr)):
        raise ValueError("bessel_j requires x >= 0")
    if order.is_half_integer:
        flat = _half_integer_j(order.two_nu, arr.ravel())
        out = flat.reshape(arr.shape)
    else:
        out = special.jv(order.nu, arr)
    return float(out) if scalar else out


def bessel_k(nu: float, x):
    """Modified Bessel function of the second kind ``K_nu(x)``, ``x > 0``."""
    if not isinstance(nu, Real):
        raise TypeError("nu must be real")
    arr, scalar = _as_array(x)
    if np.any(~(arr > 0)):
        raise ValueError("bessel_k requires x > 0 (K diverges at the origin)")
    out = special.kv(abs(float(nu)), arr)
    return float(out) if scalar else out


def gamma(x):
    """Euler Gamma function (vectorised)."""
    arr, scalar = _as_array(x)
    out = special.gamma(arr)
    return float(out) if scalar else out


def j_amplitude_bound(two_nu: int, z):
    """Upper bound ``sqrt(2^{2nu+2}/(pi z))`` on ``|J_nu(z)|`` for half-integer
    multiples ``nu = l/2``; also used as the tail envelope by the quadrature."""
    return np.sqrt(2.0 ** (two_nu + 2) / (np.pi * np.asarray(z, dtype=float)))
