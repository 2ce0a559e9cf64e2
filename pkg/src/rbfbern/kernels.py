"""Smooth radial kernel families defined through their Fourier profiles.

``K1`` kernels have a profile vanishing on ``[0, 1]`` (an annulus in frequency);
``K2`` kernels are low-pass: the profile equals 1 on ``[0, 1/2]``, 0 on
``[1, inf)`` and is non-increasing. Both are built from ``psi(x) = exp(-1/x)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hankel import HankelSpec, RadialFunction, radial_fourier

K1 = "K1"
K2 = "K2"
DEFAULT_GLUE = {K1: (1.0, 3.0), K2: (0.5, 1.0)}


def psi(x):
    x = np.asarray(x, dtype=float)
    pos = x > 0
    out = np.zeros_like(x)
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def _bump(r: np.ndarray, a: float, b: float) -> np.ndarray:
    out = np.zeros_like(r)
    inside = (r > a) & (r < b)
    ri = r[inside]
    out[inside] = np.exp(-1.0 / ((ri - a) * (b - ri)))
    return out


def _step_down(r: np.ndarray, a: float, b: float) -> np.ndarray:
    width = b - a
    up = psi((b - r) / width)
    down = psi((r - a) / width)
    return up / (up + down)


@dataclass(frozen=True)
class KernelProfile:
    """Fourier profile ``r -> kappa(r / sigma)`` of a radial kernel."""

    kind: str
    glue: tuple[float, float]
    sigma: float = 1.0

    def __post_init__(self):
        a, b = self.glue
        if self.kind == K1:
            if not (1.0 <= a < b):
                raise ValueError("K1 glue must satisfy 1 <= a < b")
        elif self.kind == K2:
            if not (0.5 <= a < b <= 1.0):
                raise ValueError("K2 glue must lie inside [1/2, 1]")
        else:
            raise ValueError(f"unknown kernel class {self.kind!r}")
        if self.sigma < 1.0:
            raise ValueError("kernel families are indexed by sigma >= 1")

    def kappa(self, r):
        s = np.asarray(r, dtype=float) / self.sigma
        a, b = self.glue
        if self.kind == K1:
            return _bump(s, a, b)
        return _step_down(s, a, b)

    __call__ = kappa

    @property
    def support(self) -> tuple[float, float]:
        a, b = self.glue
        lo = a * self.sigma if self.kind == K1 else 0.0
        return lo, b * self.sigma

    @property
    def knots(self) -> tuple[float, ...]:
        return tuple(v * self.sigma for v in self.glue)

    def radial(self) -> RadialFunction:
        lo, hi = self.support
        return RadialFunction(self.kappa, lo=lo, hi=hi, knots=self.knots)


def make_kernel(kind: str, glue: tuple[float, float] | None = None) -> KernelProfile:
    kind = kind.upper()
    if kind not in DEFAULT_GLUE:
        raise ValueError(f"unknown kernel class {kind!r}")
    glue = DEFAULT_GLUE[kind] if glue is None else (float(glue[0]), float(glue[1]))
    return KernelProfile(kind, glue)


def scaled(kp: KernelProfile, sigma: float) -> KernelProfile:
    if sigma < 1.0:
        raise ValueError("sigma must be >= 1")
    return KernelProfile(kp.kind, kp.glue, kp.sigma * sigma)


def kernel_space_eval(kp: KernelProfile, sigma: float, dim: int, r, spec: HankelSpec | None = None):
    """``K_sigma(x)`` for ``|x| = r`` (scalar or array)."""
    return radial_fourier(scaled(kp, sigma).radial(), dim, r, spec)


def sup_bound_constant(kp: KernelProfile, dim: int) -> float:
    """``c_d int kappa(t) t^{d-1} dt``: the sup of ``|K_1|`` (attained at 0)."""
    return kernel_space_eval(kp, 1.0, dim, 0.0)


def kernel_l1_mass(kp: KernelProfile, dim: int) -> float:
    """Exact value of ``int K_sigma`` under the symmetric convention."""
    return (2.0 * math.pi) ** (dim / 2.0) * float(kp.kappa(np.array([0.0]))[0])
