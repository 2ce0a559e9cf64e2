"""Radial Fourier transforms in R^d as one-dimensional Bessel integrals.

With the symmetric convention ``f^(w) = (2 pi)^{-d/2} int f(x) exp(-i w.x) dx``
a radial function with profile ``g`` has the radial transform

    F(r) = r^{-(d-2)/2} int_0^inf g(t) t^{d/2} J_{(d-2)/2}(r t) dt,   r > 0,
    F(0) = c_d int_0^inf g(t) t^{d-1} dt,   c_d = 2^{1-d/2} / Gamma(d/2).

The integral is evaluated with fixed-order Gauss-Legendre panels no longer
than a fraction of the oscillation period ``2 pi / r``. Infinite tails are
truncated once the integrand envelope (from the amplitude bound on J) falls
below a tenth of the tolerance; in the oscillatory regime the final
half-period is averaged out of the partial sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .specfun import BesselOrder, bessel_j, j_amplitude_bound


class QuadratureError(RuntimeError):
    """Raised when a Bessel integral fails to converge under the given spec."""


@dataclass(frozen=True)
class HankelSpec:
    gauss_order: int = 16
    panel_width: float = 0.5
    t_max: float | None = None
    abs_tol: float = 1e-11
    rel_tol: float = 1e-10
    min_panels: int = 32
    tail_growth: float = 0.25
    max_panels: int = 20_000_000

    def __post_init__(self):
        if not (0 < self.panel_width <= 0.5):
            raise ValueError("panel_width must lie in (0, 1/2]")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.gauss_order < 2 or self.min_panels < 1:
            raise ValueError("invalid panel rule")

    def halved(self) -> "HankelSpec":
        return HankelSpec(
            gauss_order=self.gauss_order,
            panel_width=self.panel_width / 2,
            t_max=self.t_max,
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            min_panels=2 * self.min_panels,
            tail_growth=self.tail_growth / 2,
            max_panels=self.max_panels,
        )


DEFAULT_SPEC = HankelSpec()


@dataclass(frozen=True)
class RadialFunction:
    """A profile ``t -> g(t)`` on ``[lo, hi)`` (zero elsewhere).

    ``scale`` is the length over which ``g`` has structure near ``lo`` when
    the support is unbounded; ``knots`` are interior points that must fall on
    panel boundaries (glue points of piecewise constructions).
    """

    func: Callable[[np.ndarray], np.ndarray]
    lo: float = 0.0
    hi: float = math.inf
    scale: float = 1.0
    knots: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not (self.hi > self.lo >= 0.0):
            raise ValueError("support must satisfy 0 <= lo < hi")

    def __call__(self, t):
        return self.func(t)

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.hi)

    @property
    def feature_end(self) -> float:
        if self.bounded:
            return self.hi
        end = self.lo + self.scale
        if self.knots:
            end = max(end, max(self.knots))
        return end


def as_radial(g) -> RadialFunction:
    return g if isinstance(g, RadialFunction) else RadialFunction(g)


def origin_constant(dim: int) -> float:
    """``c_d`` relating the radial moment integral to ``F(0)``."""
    return 2.0 ** (1.0 - dim / 2.0) / math.gamma(dim / 2.0)


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def _bessel_kernel(dim: int, r: float, t: np.ndarray) -> np.ndarray:
    """``r^{-(d-2)/2} t^{d/2} J_{(d-2)/2}(r t)`` with closed forms for d = 1, 3."""
    if r == 0.0:
        return origin_constant(dim) * t ** (dim - 1)
    if dim == 1:
        return math.sqrt(2.0 / math.pi) * np.cos(r * t)
    if dim == 3:
        return math.sqrt(2.0 / math.pi) * t * np.sin(r * t) / r
    order = BesselOrder(dim - 2)
    return r ** (-(dim - 2) / 2.0) * t ** (dim / 2.0) * bessel_j(order, r * t)


def _envelope(dim: int, r: float, t: np.ndarray, gabs: np.ndarray) -> float:
    if r == 0.0:
        return float(np.max(origin_constant(dim) * gabs * t ** dim))
    amp = j_amplitude_bound(dim - 2, r * t)
    return float(np.max(gabs * t ** (dim / 2.0) * r ** (-(dim - 2) / 2.0) * amp))


def _eval_panels(g: RadialFunction, dim: int, r: float, edges: np.ndarray, spec: HankelSpec):
    x, w = _gauss(spec.gauss_order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    t = a + half * (x[None, :] + 1.0)
    vals = np.asarray(g(t), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("profile returned NaN or inf inside the integration range")
    panel = np.sum(vals * _bessel_kernel(dim, r, t) * w[None, :], axis=1) * half[:, 0]
    return panel, t[-1], np.abs(vals[-1])


def _uniform_edges(lo: float, hi: float, max_len: float, min_panels: int, knots=()):
    pts = sorted({lo, hi, *[k for k in knots if lo < k < hi]})
    out = [np.array([lo])]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(min_panels, int(math.ceil((b - a) / max_len)))
        out.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(out)


def _osc_length(r: float, spec: HankelSpec) -> float:
    return math.inf if r == 0.0 else spec.panel_width * 2.0 * math.pi / r


def _integrate_bounded(g: RadialFunction, dim: int, r: float, spec: HankelSpec) -> float:
    osc = _osc_length(r, spec)
    base = (g.hi - g.lo) / spec.min_panels
    edges = _uniform_edges(g.lo, g.hi, min(osc, base), 1, g.knots)
    panel, _, _ = _eval_panels(g, dim, r, edges, spec)
    return float(np.sum(panel))


def _averaged(partials: list[float], rounds: int) -> float:
    """``rounds``-fold repeated averaging of consecutive partial sums."""
    tail = partials[-(rounds + 1):]
    weights = [math.comb(rounds, j) for j in range(rounds + 1)]
    return sum(w * s for w, s in zip(weights, tail)) / 2.0 ** rounds


ACCEL_ROUNDS = 8


def _integrate_unbounded(g: RadialFunction, dim: int, r: float, spec: HankelSpec) -> float:
    osc = _osc_length(r, spec)
    end = g.feature_end
    base = (end - g.lo) / spec.min_panels
    edges = _uniform_edges(g.lo, end, min(osc, base), 1, g.knots)
    panel, _, _ = _eval_panels(g, dim, r, edges, spec)
    total = float(np.sum(panel))
    per_half = int(round(0.5 / spec.panel_width))
    halves_ok = r > 0.0 and abs(2 * per_half * spec.panel_width - 1.0) < 1e-12
    partials: list[float] = []  # partial sums at half-period boundaries
    last_half = 0.0
    previous_estimate = None
    t = end
    n_used = len(edges) - 1
    chunk = 8 * per_half
    t_cap = spec.t_max if spec.t_max is not None else math.inf
    while True:
        length = min(osc, max(base, spec.tail_growth * t))
        uniform = length >= osc
        if uniform:
            new = t + osc * np.arange(1, chunk + 1)
        else:
            # geometric growth until the oscillation cap binds
            ratio = 1.0 + spec.tail_growth
            steps = 64
            if math.isfinite(osc):
                steps = max(1, int(math.ceil(math.log(osc / length) / math.log(ratio))))
            new = t * ratio ** np.arange(1, min(steps, 64) + 1)
        if new[-1] > t_cap:
            new = np.append(new[new < t_cap], t_cap)
            uniform = False
        edges = np.concatenate(([t], new))
        panel, t_last, g_last = _eval_panels(g, dim, r, edges, spec)
        if uniform and halves_ok:
            halves = panel.reshape(-1, per_half).sum(axis=1)
            partials.extend((total + np.cumsum(halves)).tolist())
            last_half = float(halves[-1])
            partials = partials[-(ACCEL_ROUNDS + 1):]
        total += float(np.sum(panel))
        t = float(edges[-1])
        n_used += len(panel)
        env = _envelope(dim, r, t_last, g_last)
        tol = spec.abs_tol + spec.rel_tol * abs(total)
        reach = 1.0 if r == 0.0 else max(1.0, 1.0 / r)
        if env * reach < tol / 10.0:
            if uniform and halves_ok:
                return total - 0.5 * last_half
            return total
        if len(partials) > ACCEL_ROUNDS:
            estimate = _averaged(partials, ACCEL_ROUNDS)
            if previous_estimate is not None and abs(estimate - previous_estimate) < tol / 10.0:
                return estimate
            previous_estimate = estimate
        if t >= t_cap or n_used > spec.max_panels:
            raise QuadratureError(
                f"increase truncation: tail envelope {env:.3e} at t={t:.3e} exceeds "
                f"tolerance {tol:.3e} (dim={dim}, r={r})"
            )
        if uniform:
            chunk = min(2 * chunk, per_half << 16)


# the oscillation period 2 pi / r must stay representable
MIN_RADIUS = 1e-100


def radial_fourier(g, dim: int, r, spec: HankelSpec | None = None):
    """Radial profile of the d-dimensional Fourier transform of ``g(|w|)``.

    ``r`` may be a scalar or an array of non-negative radii.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    spec = spec or DEFAULT_SPEC
    g = as_radial(g)
    rs = np.asarray(r, dtype=float)
    if np.any(rs < 0) or np.any(np.isnan(rs)):
        raise ValueError("radius must be non-negative")
    if np.any((rs > 0) & (rs < MIN_RADIUS)):
        raise ValueError(f"positive radii below {MIN_RADIUS:g} are not resolvable; use r = 0")
    integrate = _integrate_bounded if g.bounded else _integrate_unbounded
    out = np.array([integrate(g, dim, float(ri), spec) for ri in rs.ravel()])
    out = out.reshape(rs.shape)
    return float(out) if rs.ndim == 0 else out


def radial_moment(g, dim: int, spec: HankelSpec | None = None) -> float:
    """``int g(t) t^{d-1} dt`` (the ``r = 0`` integral without ``c_d``)."""
    return radial_fourier(g, dim, 0.0, spec) / origin_constant(dim)


# ---------------------------------------------------------------------------
# decay of oscillatory Fourier integrals


@dataclass(frozen=True)
class DecayFit:
    mode: str
    dim: int
    n: int
    alphas: np.ndarray
    values: np.ndarray
    used: np.ndarray
    slope: float
    noise_floor: float

    @property
    def truncated(self) -> bool:
        return not bool(np.all(self.used))

    @property
    def contract_ok(self) -> bool:
        return self.slope <= -self.n + 0.25


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _fd_derivatives(f, t: np.ndarray, order: int) -> list[np.ndarray]:
    h = np.maximum(1e-3 * np.abs(t), 1e-4)
    out = []
    for k in range(1, order + 1):
        coeffs = np.array([(-1) ** (k - j) * math.comb(k, j) for j in range(k + 1)], dtype=float)
        # central k-th difference on a half-step lattice
        pts = t[:, None] + h[:, None] * (np.arange(k + 1) - k / 2.0)[None, :]
        out.append(np.sum(np.asarray(f(pts)) * coeffs, axis=1) / h ** k)
    return out


def _check_hypotheses(f: RadialFunction, mode: str, n: int):
    probe = np.linspace(0.05, 6.0, 241)
    vals = np.asarray(f(probe), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("profile is not finite on the probe grid")
    for deriv in _fd_derivatives(f, probe, n):
        if not np.all(np.isfinite(deriv)):
            raise ValueError("profile derivatives are not finite (C^n hypothesis)")
    if mode == "tail":
        low = np.linspace(0.0, 0.5, 51)
        if np.max(np.abs(f(low))) > 1e-12:
            raise ValueError("tail mode requires f = 0 on [0, 1/2]")
    else:
        if abs(float(f(np.array([1e-6]))[0]) - 1.0) > 1e-12:
            raise ValueError("origin mode requires f = 1 near 0")
        beyond = np.linspace(2.0, 6.0, 41)
        if np.max(np.abs(f(beyond))) > 1e-12:
            raise ValueError("origin mode requires f = 0 beyond 2")


def decay_check(
    f,
    dim: int,
    mode: str,
    n: int,
    alphas: Sequence[float],
    spec: HankelSpec | None = None,
    noise_floor: float | None = None,
) -> DecayFit:
    """Fit the decay rate in ``alpha`` of the oscillatory integrals

    * ``mode="tail"``:   ``|int_{1/2}^inf f(t) t^{d/2} J_{(d-2)/2}(alpha t) dt|``
    * ``mode="origin"``: ``|int_0^2 t f(t) t^{d/2} J_{(d-2)/2}(alpha t) dt|``

    Values below ``noise_floor`` (default ``1000 * abs_tol``) are dropped from
    the fit and reported through ``used``.
    """
    if mode not in ("tail", "origin"):
        raise ValueError("mode must be 'tail' or 'origin'")
    spec = spec or DEFAULT_SPEC
    f = as_radial(f)
    _check_hypotheses(f, mode, n)
    alphas = np.asarray(sorted(alphas), dtype=float)
    if np.any(alphas < 1.0):
        raise ValueError("alphas must be >= 1")
    if mode == "tail":
        g = RadialFunction(f.func, lo=0.5, hi=f.hi, scale=max(f.scale, 1.0), knots=f.knots)
    else:
        g = RadialFunction(lambda t: t * f(t), lo=0.0, hi=2.0, knots=f.knots)
    nu_factor = (dim - 2) / 2.0
    vals = np.array([abs(radial_fourier(g, dim, a, spec)) * a ** nu_factor for a in alphas])
    floor = 1000.0 * spec.abs_tol if noise_floor is None else noise_floor
    used = vals > floor
    if used.sum() < 2:
        raise QuadratureError("fewer than two alphas above the quadrature noise floor")
    slope = loglog_slope(alphas[used], vals[used])
    return DecayFit(mode, dim, n, alphas, vals, used, slope, floor)


def parse_alphas(text: str) -> np.ndarray:
    """Parse ``lo:hi:log[:num]``, ``lo:hi:lin[:num]`` or a comma list."""
    if ":" in text:
        parts = text.split(":")
        lo, hi = float(parts[0]), float(parts[1])
        kind = parts[2] if len(parts) > 2 else "log"
        num = int(parts[3]) if len(parts) > 3 else None
        if kind == "log":
            num = num or int(round(2 * math.log2(hi / lo))) + 1
            return np.geomspace(lo, hi, num)
        if kind == "lin":
            return np.linspace(lo, hi, num or int(hi - lo) + 1)
        raise ValueError(f"unknown spacing {kind!r}")
    return np.array([float(v) for v in text.split(",")])
