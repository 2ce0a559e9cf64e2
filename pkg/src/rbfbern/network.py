"""RBF networks, uniform-grid sampling and discrete Bessel-potential norms.

Continuum norms over R^d are replaced by sums over a padded uniform grid.
The grid spacing follows ``spacing = q / divisor`` and the padding extends
until ``|Phi(r)| / Phi(0)`` falls below a tail tolerance; both are collected in
:class:`GridRule`.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Box, PointSet
from .rbf import RadialProfile

MAX_GRID_POINTS = 1 << 24
MAX_DESIGN_ENTRIES = 60_000_000


class GridBudgetError(MemoryError):
    """Raised when a grid or design matrix would exceed the memory budget."""


@dataclass(frozen=True, eq=False)
class RBFNetwork:
    """``g = sum_j a_j Phi(. - xi_j)``."""

    centers: PointSet
    coeffs: np.ndarray
    profile: RadialProfile

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=float, copy=True).ravel()
        if a.size != len(self.centers):
            raise ValueError("need one coefficient per center")
        if self.profile.generalized:
            raise ValueError(f"{self.profile.name} networks are not classically defined")
        if self.profile.space_eval is None:
            raise ValueError("profile has no space-side evaluation")
        a.setflags(write=False)
        object.__setattr__(self, "coeffs", a)

    @property
    def dim(self) -> int:
        return self.centers.dim

    def with_coeffs(self, coeffs) -> "RBFNetwork":
        return RBFNetwork(self.centers, coeffs, self.profile)


def evaluate(net: RBFNetwork, x):
    """Network values at one point (shape ``(d,)``) or many (shape ``(M, d)``)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1 and x.size == net.dim
    pts = x.reshape(-1, net.dim)
    r = cdist(pts, net.centers.points)
    vals = net.profile(r) @ net.coeffs
    return float(vals[0]) if single else vals


# ---------------------------------------------------------------------------
# grid fields


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples ``values[i_1, .., i_d]`` at ``origin + spacing * (i_1, .., i_d)``."""

    origin: tuple[float, ...]
    spacing: float
    values: np.ndarray
    pad_radius: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.ndim != len(self.origin):
            raise ValueError("values rank must equal the dimension")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if any(n < 2 for n in vals.shape):
            raise ValueError("grid extents must be >= 2 per axis")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))

    @property
    def dim(self) -> int:
        return len(self.origin)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axes(self) -> list[np.ndarray]:
        return [o + self.spacing * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def with_values(self, values) -> "GridField":
        return GridField(self.origin, self.spacing, values, self.pad_radius)


_HEADER = "<q"


def write_field(field: GridField, path) -> None:
    """Binary layout (little endian): int64 d, int64 extents[d],
    float64 origin[d], float64 spacing, then row-major float64 values."""
    d = field.dim
    head = struct.pack(f"<q{d}q{d}dd", d, *field.shape, *field.origin, field.spacing)
    Path(path).write_bytes(head + np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_field(path) -> GridField:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError("truncated field file")
    (d,) = struct.unpack_from(_HEADER, raw, 0)
    if not 1 <= d <= 8:
        raise ValueError(f"implausible dimension {d} in field header")
    off = 8
    shape = struct.unpack_from(f"<{d}q", raw, off)
    off += 8 * d
    origin = struct.unpack_from(f"<{d}d", raw, off)
    off += 8 * d
    (spacing,) = struct.unpack_from("<d", raw, off)
    off += 8
    count = int(np.prod(shape))
    if len(raw) - off != 8 * count:
        raise ValueError("field payload does not match the header extents")
    vals = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
    return GridField(origin, spacing, vals)


# ---------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormSpec:
    """Bessel-potential norm ``||.||_{k,p}``."""

    k: float = 0.0
    p: float = 2.0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("smoothness k must be >= 0")
        if not (1.0 <= self.p <= math.inf):
            raise ValueError("p must lie in [1, inf]")

    @property
    def p_conj(self) -> float:
        if self.p == 1.0:
            return math.inf
        if math.isinf(self.p):
            return 1.0
        return self.p / (self.p - 1.0)

    def validate_for(self, beta: float, dim: int) -> "NormSpec":
        if not self.k < beta - dim:
            raise ValueError(f"k = {self.k} violates k < beta - d = {beta - dim}")
        return self


def coeff_norm(a, p: float) -> float:
    a = np.abs(np.asarray(a, dtype=float).ravel())
    top = float(a.max()) if a.size else 0.0
    if math.isinf(p) or top == 0.0:
        return top
    # scale by the max so tiny or huge entries do not under/overflow in a^p
    return top * float(np.sum((a / top) ** p) ** (1.0 / p))


def lp_norm(values, spacing: float, p: float, dim: int | None = None) -> np.ndarray | float:
    """Discrete ``L^p`` norm ``(spacing^d sum |v|^p)^{1/p}`` (max for ``p = inf``).

    With ``dim`` given, the trailing axis beyond ``dim`` is a batch axis.
    """
    v = np.abs(np.asarray(values, dtype=float))
    dim = v.ndim if dim is None else dim
    axes = tuple(range(dim))
    if math.isinf(p):
        out = v.max(axis=axes)
    elif p == 1.0:
        out = spacing ** dim * v.sum(axis=axes)
    elif p == 2.0:
        out = np.sqrt(spacing ** dim * np.sum(v * v, axis=axes))
    else:
        out = (spacing ** dim * np.sum(v ** p, axis=axes)) ** (1.0 / p)
    return float(out) if np.ndim(out) == 0 else out


def frequency_radius(shape, spacing: float) -> np.ndarray:
    """``|w|`` on the DFT lattice, ``w = 2 pi m / (n spacing)``."""
    freqs = [2.0 * math.pi * np.fft.fftfreq(n, d=spacing) for n in shape]
    mesh = np.meshgrid(*freqs, indexing="ij")
    return np.sqrt(sum(m * m for m in mesh))


def nyquist(spacing: float) -> float:
    return math.pi / spacing


def apply_multiplier(values, spacing: float, multiplier: Callable[[np.ndarray], np.ndarray], dim: int | None = None):
    """Apply the Fourier multiplier ``m(|w|)`` to grid values (batch axis last)."""
    v = np.asarray(values, dtype=float)
    dim = v.ndim if dim is None else dim
    axes = tuple(range(dim))
    w = frequency_radius(v.shape[:dim], spacing)
    m = np.asarray(multiplier(w), dtype=float)
    m = m.reshape(m.shape + (1,) * (v.ndim - dim))
    spec = np.fft.fftn(v, axes=axes)
    return np.real(np.fft.ifftn(spec * m, axes=axes))


def boundary_max(values, dim: int | None = None) -> np.ndarray:
    v = np.abs(np.asarray(values, dtype=float))
    dim = v.ndim if dim is None else dim
    out = np.zeros(v.shape[dim:])
    for ax in range(dim):
        out = np.maximum(out, np.take(v, 0, axis=ax).max(axis=tuple(range(dim - 1))))
        out = np.maximum(out, np.take(v, -1, axis=ax).max(axis=tuple(range(dim - 1))))
    return out


def check_decay(values, tail_tol: float, dim: int | None = None) -> None:
    v = np.asarray(values, dtype=float)
    dim = v.ndim if dim is None else dim
    peak = np.abs(v).max(axis=tuple(range(dim)))
    edge = boundary_max(v, dim)
    if np.any(edge > tail_tol * np.maximum(peak, np.finfo(float).tiny)):
        raise ValueError("field has not decayed at the grid boundary: increase pad")


def bessel_potential(values, spacing: float, k: float, dim: int | None = None):
    """Grid values of ``((1 + |w|^2)^{k/2} f^)^v``."""
    if k == 0:
        return np.asarray(values, dtype=float)
    return apply_multiplier(values, spacing, lambda w: (1.0 + w * w) ** (k / 2.0), dim)


DEFAULT_TAIL_TOL = 1e-6


def sobolev_norm(field: GridField, spec: NormSpec, tail_tol: float = DEFAULT_TAIL_TOL) -> float:
    """Discrete ``||f||_{k,p}``; ``k = 0`` is the plain discrete ``L^p`` norm.

    The boundary check compares the largest boundary value with the field's
    peak, relative tolerance ``tail_tol``.
    """
    check_decay(field.values, tail_tol)
    vals = bessel_potential(field.values, field.spacing, spec.k)
    return lp_norm(vals, field.spacing, spec.p)


def sobolev_norms(values, spacing: float, spec: NormSpec, dim: int, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Batched :func:`sobolev_norm` over a trailing axis of ``values``."""
    check_decay(values, tail_tol, dim)
    return np.atleast_1d(lp_norm(bessel_potential(values, spacing, spec.k, dim), spacing, spec.p, dim))


# ---------------------------------------------------------------------------
# sampling


@dataclass(frozen=True)
class GridRule:
    """Resolution ``spacing = q / divisor``; padding where ``|Phi|/Phi(0) < pad_tol``."""

    divisor: float = 8.0
    pad_tol: float = 1e-8

    def spacing(self, q: float) -> float:
        return q / self.divisor


TOL_PROFILES = {"strict": GridRule(8.0, 1e-8), "fast": GridRule(4.0, 1e-6)}


def decay_radius(profile: RadialProfile, tol: float) -> float:
    """Smallest ``r`` (to 1e-6 relative) with ``|Phi(s)| <= tol |Phi(0)|`` for all ``s >= r``.

    Profiles are assumed to have an eventually monotone envelope; the scan
    doubles ``r`` and then bisects.
    """
    ref = abs(float(profile(np.array([0.0]))[0]))

    def small(r):
        s = r * np.linspace(1.0, 2.0, 33)
        return bool(np.all(np.abs(profile(s)) <= tol * ref))

    hi = 1.0
    while not small(hi):
        hi *= 2.0
        if hi > 1e6:
            raise ValueError("profile does not decay below the tail tolerance")
    lo = 0.0
    while hi - lo > 1e-6 * hi:
        mid = 0.5 * (lo + hi)
        if small(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class GridLayout:
    origin: tuple[float, ...]
    shape: tuple[int, ...]
    spacing: float
    pad: float

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axes(self) -> list[np.ndarray]:
        return [o + self.spacing * np.arange(n) for o, n in zip(self.origin, self.shape)]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


def grid_layout(domain: Box, spacing: float, pad: float, max_points: int = MAX_GRID_POINTS) -> GridLayout:
    if spacing <= 0 or pad < 0:
        raise ValueError("spacing must be positive and pad non-negative")
    # whole number of steps so the domain corner (and grid-aligned centers) are nodes
    pad = math.ceil(pad / spacing - 1e-9) * spacing
    shape = tuple(int(math.ceil((hi - lo + 2 * pad) / spacing)) + 1 for lo, hi in zip(domain.lo, domain.hi))
    total = int(np.prod(shape))
    if total > max_points:
        factor = (total / max_points) ** (1.0 / domain.dim)
        raise GridBudgetError(f"grid of {total} points exceeds budget {max_points}; try spacing >= {spacing * factor:.3g}")
    origin = tuple(lo - pad for lo in domain.lo)
    return GridLayout(origin, shape, spacing, pad)


def design_matrix(layout: GridLayout, centers: PointSet, profile: RadialProfile,
                  max_entries: int = MAX_DESIGN_ENTRIES) -> np.ndarray:
    """``B[i, j] = Phi(|x_i - xi_j|)`` over the grid nodes ``x_i``."""
    entries = layout.size * len(centers)
    if entries > max_entries:
        factor = (entries / max_entries) ** (1.0 / centers.dim)
        raise GridBudgetError(
            f"design matrix with {entries} entries exceeds budget {max_entries}; "
            f"try spacing >= {layout.spacing * factor:.3g}"
        )
    return profile(cdist(layout.nodes(), centers.points))


def design_product(layout: GridLayout, centers: PointSet, profile: RadialProfile, coeffs: np.ndarray,
                   max_entries: int = MAX_DESIGN_ENTRIES) -> np.ndarray:
    """``B @ coeffs`` for the grid design matrix, built in row blocks of at most ``max_entries``."""
    nodes = layout.nodes()
    step = max(1, max_entries // len(centers))
    out = np.empty((len(nodes),) + coeffs.shape[1:])
    for start in range(0, len(nodes), step):
        block = nodes[start:start + step]
        out[start:start + len(block)] = profile(cdist(block, centers.points)) @ coeffs
    return out


def sample_to_grid(net: RBFNetwork, spacing: float, pad: float, max_points: int = MAX_GRID_POINTS) -> GridField:
    layout = grid_layout(net.centers.domain, spacing, pad, max_points)
    vals = design_product(layout, net.centers, net.profile, np.asarray(net.coeffs))
    return GridField(layout.origin, spacing, vals.reshape(layout.shape), pad_radius=pad)


def sample_batch(centers: PointSet, profile: RadialProfile, coeffs: np.ndarray, rule: GridRule,
                 q: float) -> tuple[GridLayout, np.ndarray]:
    """Sample many networks on one grid; ``coeffs`` has shape ``(N, trials)``.

    Returns the layout and values of shape ``layout.shape + (trials,)``.
    """
    pad = decay_radius(profile, rule.pad_tol)
    layout = grid_layout(centers.domain, rule.spacing(q), pad)
    coeffs = np.asarray(coeffs, dtype=float).reshape(len(centers), -1)
    vals = design_product(layout, centers, profile, coeffs)
    return layout, vals.reshape(layout.shape + (coeffs.shape[1],))


def point_values(values, origin, spacing: float, points: np.ndarray,
                 multiplier: Callable[[np.ndarray], np.ndarray] | None = None) -> np.ndarray:
    """Evaluate the trigonometric interpolant of grid data at arbitrary points.

    With ``multiplier`` given, the Fourier multiplier ``m(|w|)`` is applied
    first. A direct non-uniform DFT is used; the Nyquist mode is dropped.
    """
    v = np.asarray(values, dtype=float)
    dim = len(origin)
    pts = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(origin)[None, :]
    upper = np.asarray(spacing * (np.array(v.shape) - 1))
    if np.any(pts < -1e-12) or np.any(pts > upper + 1e-12):
        raise ValueError("evaluation points lie outside the grid")
    spec = np.fft.fftn(v) / v.size
    freqs = [2.0 * math.pi * np.fft.fftfreq(n, d=spacing) for n in v.shape]
    for ax, n in enumerate(v.shape):
        if n % 2 == 0:
            idx = [slice(None)] * dim
            idx[ax] = n // 2
            spec[tuple(idx)] = 0.0
    if multiplier is not None:
        spec = spec * np.asarray(multiplier(frequency_radius(v.shape, spacing)))
    out = np.empty(len(pts))
    for i, x in enumerate(pts):
        term = spec
        for ax in range(dim - 1, -1, -1):
            phase = np.exp(1j * freqs[ax] * x[ax])
            term = term @ phase
        out[i] = float(np.real(term))
    return out
