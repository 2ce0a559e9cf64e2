"""Point-set geometry: separation radius, fill distance, mesh ratio.

The fill distance is approximated from below by scanning a candidate grid
over the domain box, so reports always carry the candidate density used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("box corners must have the same positive dimension")
        if any(not (h > l) for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty domain box")

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "Box":
        return cls((float(lo),) * dim, (float(hi),) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(np.subtract(self.hi, self.lo)))

    def contains(self, pts: np.ndarray, slack: float = 1e-12) -> np.ndarray:
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((pts >= lo - slack) & (pts <= hi + slack), axis=1)

    def scaled(self, lam: float) -> "Box":
        return Box(tuple(lam * v for v in self.lo), tuple(lam * v for v in self.hi))

    def shifted(self, v) -> "Box":
        return Box(tuple(a + b for a, b in zip(self.lo, v)), tuple(a + b for a, b in zip(self.hi, v)))


@dataclass(frozen=True, eq=False)
class PointSet:
    """A finite set of distinct centers inside an axis-aligned domain box."""

    points: np.ndarray
    domain: Box

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise ValueError("points must be an (N, d) array")
        if pts.shape[0] and pts.shape[1] != self.domain.dim:
            raise ValueError("points and domain disagree on dimension")
        if pts.shape[0] and not np.all(self.domain.contains(pts)):
            raise ValueError("all points must lie inside the domain box")
        if len(np.unique(pts, axis=0)) != len(pts):
            raise ValueError("points must be distinct")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points, domain: Box | None = None) -> "PointSet":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if np.asarray(points).ndim == 1:
            pts = np.asarray(points, dtype=float)[:, None]
        if domain is None:
            lo, hi = pts.min(axis=0), pts.max(axis=0)
            hi = np.where(hi > lo, hi, lo + 1.0)
            domain = Box(tuple(lo), tuple(hi))
        return cls(pts, domain)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def __len__(self) -> int:
        return len(self.points)

    def scaled(self, lam: float) -> "PointSet":
        if lam <= 0:
            raise ValueError("dilation factor must be positive")
        return PointSet(lam * self.points, self.domain.scaled(lam))

    def translated(self, v) -> "PointSet":
        v = np.asarray(v, dtype=float)
        return PointSet(self.points + v, self.domain.shifted(v))

    def union(self, other: "PointSet") -> "PointSet":
        lo = np.minimum(self.domain.lo, other.domain.lo)
        hi = np.maximum(self.domain.hi, other.domain.hi)
        pts = np.unique(np.vstack([self.points, other.points]), axis=0)
        return PointSet(pts, Box(tuple(lo), tuple(hi)))

    def contains_set(self, other: "PointSet", tol: float = 1e-12) -> bool:
        if len(other) == 0:
            return True
        dist, _ = cKDTree(self.points).query(other.points)
        return bool(np.all(dist <= tol))


@dataclass(frozen=True)
class GeometryReport:
    q: float
    h: float
    rho: float
    candidate_density: int

    def as_dict(self) -> dict:
        return {"q": self.q, "h": self.h, "rho": self.rho, "candidate_density": self.candidate_density}


def separation_radius(ps: PointSet) -> float:
    if len(ps) < 2:
        raise ValueError("separation undefined for fewer than 2 points")
    return 0.5 * float(np.min(pdist(ps.points)))


def candidate_grid(domain: Box, density: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, density + 1) for lo, hi in zip(domain.lo, domain.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def fill_distance(ps: PointSet, candidate_density: int) -> float:
    """Max over ``(density+1)^d`` candidate nodes of the distance to the set.

    This is a lower bound for the true fill distance over the box.
    """
    if len(ps) == 0:
        raise ValueError("fill distance undefined for an empty set")
    tree = cKDTree(ps.points)
    best = 0.0
    cand = candidate_grid(ps.domain, candidate_density)
    for start in range(0, len(cand), 1 << 20):
        dist, _ = tree.query(cand[start:start + (1 << 20)])
        best = max(best, float(dist.max()))
    return best


def geometry_report(ps: PointSet, candidate_density: int = 400) -> GeometryReport:
    if candidate_density < 2:
        raise ValueError("candidate_density must be at least 2")
    q = separation_radius(ps)
    h = fill_distance(ps, candidate_density)
    return GeometryReport(q=q, h=h, rho=h / q, candidate_density=candidate_density)


def gen_quasi_uniform(domain: Box, spacing: float, jitter: float = 0.0, seed: int = 0) -> PointSet:
    """Grid of the given spacing anchored at ``domain.lo``, each node moved by
    an independent uniform displacement of sup-norm at most ``jitter``.

    Displaced nodes are clipped back into the box; clipping only moves a point
    toward its own node, so the separation ``q >= (spacing - 2 jitter)/2`` holds.
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if not (0.0 <= jitter < spacing / 2):
        raise ValueError("jitter must satisfy 0 <= jitter < spacing/2 (separation guarantee lost)")
    axes = []
    for lo, hi in zip(domain.lo, domain.hi):
        n = int(math.floor((hi - lo) / spacing + 1e-9))
        axes.append(lo + spacing * np.arange(n + 1))
    if any(len(a) == 0 for a in axes):
        raise ValueError("empty grid")
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    if jitter > 0:
        rng = np.random.default_rng(seed)
        pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
        pts = np.clip(pts, domain.lo, domain.hi)
    return PointSet(pts, domain)


@dataclass(frozen=True)
class PackingCheck:
    total: float
    bound: float
    ok: bool


def packing_sum_check(ps: PointSet, decay_constant: float, epsilon: float, q: float | None = None) -> PackingCheck:
    """Compare ``sum_j C |y_j|^{-d-eps}`` with ``3^d (1 + 1/eps) C q^{-d-eps}``.

    ``q`` defaults to the separation radius of ``ps``; every point must satisfy
    ``|y_j| >= q``.
    """
    if decay_constant <= 0 or epsilon <= 0:
        raise ValueError("decay constant and epsilon must be positive")
    d = ps.dim
    if len(ps) == 0:
        return PackingCheck(0.0, math.inf if q is None else 3**d * (1 + 1 / epsilon) * decay_constant * q ** (-d - epsilon), True)
    if q is None:
        q = separation_radius(ps)
    norms = np.linalg.norm(ps.points, axis=1)
    if np.any(norms < q * (1 - 1e-12)):
        raise ValueError("precondition violated: some point lies closer than q to the origin")
    total = float(np.sum(decay_constant * norms ** (-d - epsilon)))
    bound = 3**d * (1 + 1 / epsilon) * decay_constant * q ** (-d - epsilon)
    return PackingCheck(total, bound, total <= bound)


# ---------------------------------------------------------------------------
# text format:  "d N", optional "# domain lo.. hi..", then N coordinate lines


def write_points(ps: PointSet, path) -> None:
    lines = [f"{ps.dim} {len(ps)}"]
    lines.append("# domain " + " ".join(repr(float(v)) for v in (*ps.domain.lo, *ps.domain.hi)))
    for row in ps.points:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path) -> PointSet:
    dim = count = None
    domain = None
    rows = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "domain":
                vals = [float(v) for v in parts[1:]]
                half = len(vals) // 2
                domain = Box(tuple(vals[:half]), tuple(vals[half:]))
            continue
        if dim is None:
            dim, count = (int(v) for v in line.split())
            continue
        rows.append([float(v) for v in line.split()])
    if dim is None:
        raise ValueError("missing 'd N' header line")
    if len(rows) != count or any(len(r) != dim for r in rows):
        raise ValueError("point count or dimension does not match the header")
    pts = np.array(rows, dtype=float).reshape(count, dim)
    return PointSet.from_points(pts, domain)
