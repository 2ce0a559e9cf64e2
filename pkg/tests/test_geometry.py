import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbfbern.geometry import (
    Box,
    PointSet,
    candidate_grid,
    fill_distance,
    gen_quasi_uniform,
    geometry_report,
    packing_sum_check,
    read_points,
    separation_radius,
    write_points,
)


def brute_q(pts):
    n = len(pts)
    best = math.inf
    for i in range(n):
        for j in range(i + 1, n):
            best = min(best, math.sqrt(float(np.sum((pts[i] - pts[j]) ** 2))))
    return best / 2


def brute_h(pts, domain, density):
    axes = [np.linspace(lo, hi, density) for lo, hi in zip(domain.lo, domain.hi)]
    cand = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    nearest = np.full(len(cand), np.inf)
    for p in pts:
        nearest = np.minimum(nearest, np.sqrt(np.sum((cand - p) ** 2, axis=1)))
    return float(nearest.max())


def centred_minus_one(ps, index):
    """Translate ``ps`` so center ``index`` sits at the origin and drop it."""
    pts = np.delete(ps.points - ps.points[index], index, axis=0)
    box = Box(tuple(pts.min(axis=0) - 1), tuple(pts.max(axis=0) + 1))
    return PointSet(pts, box)


def test_uniform_three_points():
    rep = geometry_report(PointSet.from_points([0.0, 1.0, 2.0], Box((0.0,), (2.0,))), 100)
    assert (rep.q, rep.h, rep.rho) == (0.5, 0.5, 1.0)


def test_two_points():
    rep = geometry_report(PointSet.from_points([0.0, 3.0], Box((0.0,), (3.0,))), 100)
    assert rep.q == 1.5 and rep.h == 1.5


def test_random_2d_against_brute_force():
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(50, 2))
    ps = PointSet(pts, Box.cube(0, 1, 2))
    rep = geometry_report(ps, 100)
    assert rep.q == brute_q(pts)
    ref = brute_h(pts, ps.domain, 400)
    assert abs(rep.h - ref) <= 2 * ps.domain.diameter / 100
    assert rep.rho == rep.h / rep.q


def test_errors():
    with pytest.raises(ValueError, match="separation undefined"):
        geometry_report(PointSet.from_points([0.5], Box((0.0,), (1.0,))))
    with pytest.raises(ValueError, match="empty domain"):
        Box((0.0,), (0.0,))
    with pytest.raises(ValueError):
        PointSet.from_points([0.0, 0.0, 1.0])
    with pytest.raises(ValueError):
        PointSet.from_points([0.0, 2.0], Box((0.0,), (1.0,)))
    with pytest.raises(ValueError):
        geometry_report(PointSet.from_points([0.0, 1.0]), 1)


def test_generator_plain_grid():
    ps = gen_quasi_uniform(Box((0.0,), (1.0,)), 0.25)
    np.testing.assert_allclose(ps.points[:, 0], [0, 0.25, 0.5, 0.75, 1.0])
    assert separation_radius(ps) == 0.125


@pytest.mark.parametrize("seed", range(5))
def test_generator_jittered_guarantees(seed):
    ps = gen_quasi_uniform(Box((0.0,), (1.0,)), 0.25, 0.0625, seed)
    rep = geometry_report(ps, 400)
    assert rep.q >= 0.0625 and rep.rho <= 4


def test_generator_deterministic():
    box = Box.cube(0, 1, 2)
    a = gen_quasi_uniform(box, 0.1, 0.03, 11)
    b = gen_quasi_uniform(box, 0.1, 0.03, 11)
    np.testing.assert_array_equal(a.points, b.points)


def test_generator_errors():
    with pytest.raises(ValueError):
        gen_quasi_uniform(Box((0.0,), (1.0,)), 0.25, 0.125)
    with pytest.raises(ValueError):
        gen_quasi_uniform(Box((0.0,), (1.0,)), 0.0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), jitter=st.floats(0.0, 0.049), dim=st.integers(1, 2))
def test_generator_separation_property(seed, jitter, dim):
    ps = gen_quasi_uniform(Box.cube(0, 1, dim), 0.1, jitter, seed)
    assert separation_radius(ps) >= (0.1 - 2 * jitter) / 2 - 1e-12
    assert separation_radius(ps) == brute_q(ps.points)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.floats(0.1, 10.0))
def test_dilation_scaling(seed, lam):
    ps = gen_quasi_uniform(Box.cube(0, 1, 2), 0.2, 0.05, seed)
    a, b = geometry_report(ps, 60), geometry_report(ps.scaled(lam), 60)
    assert b.q == pytest.approx(lam * a.q, rel=1e-12)
    assert b.h == pytest.approx(lam * a.h, rel=1e-12)
    assert b.rho == pytest.approx(a.rho, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), extra=st.integers(1, 10))
def test_fill_distance_monotone_under_adding_points(seed, extra):
    rng = np.random.default_rng(seed)
    box = Box.cube(0, 1, 2)
    ps = PointSet(rng.uniform(0, 1, (15, 2)), box)
    more = ps.union(PointSet(rng.uniform(0, 1, (extra, 2)), box))
    assert fill_distance(more, 80) <= fill_distance(ps, 80)
    assert more.contains_set(ps)


def test_candidate_grid_size():
    assert candidate_grid(Box.cube(0, 1, 2), 10).shape == (121, 2)


def test_packing_integer_lattice():
    n = 2000
    pts = np.concatenate([np.arange(1, n + 1), -np.arange(1, n + 1)]).astype(float)
    ps = PointSet.from_points(pts)
    chk = packing_sum_check(ps, 1.0, 1.0, q=0.5)
    assert chk.total == pytest.approx(2 * sum(m ** -2.0 for m in range(1, n + 1)), rel=1e-12)
    assert chk.total == pytest.approx(math.pi ** 2 / 3, rel=1e-3)
    assert chk.bound == 24.0 and chk.ok


def test_packing_empty_and_precondition():
    empty = PointSet(np.zeros((0, 1)), Box((0.0,), (1.0,)))
    assert packing_sum_check(empty, 1.0, 1.0, q=0.1).total == 0 and packing_sum_check(empty, 1.0, 1.0).ok
    with pytest.raises(ValueError, match="precondition"):
        packing_sum_check(PointSet.from_points([0.05, 1.0]), 1.0, 1.0, q=0.5)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), eps=st.sampled_from([0.5, 1.0]), dim=st.integers(1, 2))
def test_packing_holds_for_generated_sets(seed, eps, dim):
    ps = gen_quasi_uniform(Box.cube(-1, 1, dim), 0.125, 0.03, seed)
    q = separation_radius(ps)
    rng = np.random.default_rng(seed)
    centred = centred_minus_one(ps, int(rng.integers(len(ps))))
    assert packing_sum_check(centred, 1.0, eps, q=q).ok


def test_point_file_round_trip(tmp_path):
    ps = gen_quasi_uniform(Box.cube(0, 1, 2), 0.25, 0.05, 4)
    write_points(ps, tmp_path / "p.txt")
    back = read_points(tmp_path / "p.txt")
    np.testing.assert_array_equal(back.points, ps.points)
    assert back.domain == ps.domain
    assert (tmp_path / "p.txt").read_text().splitlines()[0] == "2 25"


def test_point_file_without_domain(tmp_path):
    (tmp_path / "p.txt").write_text("1 3\n0\n0.5\n2\n")
    ps = read_points(tmp_path / "p.txt")
    assert ps.domain == Box((0.0,), (2.0,)) and len(ps) == 3
    (tmp_path / "bad.txt").write_text("1 3\n0\n0.5\n")
    with pytest.raises(ValueError):
        read_points(tmp_path / "bad.txt")
