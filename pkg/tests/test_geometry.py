"""Geometry oracles: line-region distances against independent minimization,
plane traces against membership grids, and canonical-form properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from cylperc.errors import DimensionMismatch, ZeroDirection
from cylperc.geometry import (
    AxisBox,
    Ball,
    CanonicalLine,
    EmptyTrace,
    PlanarSquare,
    PlaneSpec,
    Segment,
    SinglePoint,
    batch_dist_region,
    bounding_sphere,
    canonicalize_line,
    cylinder_hits,
    dist_line_point,
    dist_line_region,
    trace_on_plane,
    translate_region,
)

RNG = np.random.default_rng(20240817)


def random_line(d, rng=RNG, span=10.0):
    v = rng.standard_normal(d)
    p = rng.uniform(-span, span, d)
    return canonicalize_line(p, v)


def random_region(d, rng=RNG):
    kind = rng.integers(0, 5)
    c = rng.uniform(-6, 6, d)
    if kind == 0:
        return Ball(c, float(rng.uniform(0.0, 3.0)))
    if kind == 1:
        half = rng.uniform(0.2, 3.0, d)
        return AxisBox(c - half, c + half)
    if kind == 2:
        off = c.copy()
        off[:2] = 0.0
        return PlanarSquare(
            PlaneSpec(d, off), c[:2], float(rng.uniform(0.2, 4.0))
        )
    if kind == 3:
        return Segment(c, c + rng.uniform(-5, 5, d))
    return SinglePoint(c)


def _region_param(region, d):
    """(k, map from [0,1]^k params to a point of the region)."""
    if isinstance(region, SinglePoint):
        return 0, lambda s: region.p
    if isinstance(region, Segment):
        return 1, lambda s: region.a + s[0] * (region.b - region.a)
    if isinstance(region, Ball):
        # Direction from spherical-ish coordinates plus a radius parameter.
        def to_point(s):
            g = 2.0 * s[1:] - 1.0
            n = np.linalg.norm(g)
            if n < 1e-12:
                return region.center
            return region.center + region.radius * s[0] * g / n

        return 1 + d, to_point
    if isinstance(region, PlanarSquare):
        h = region.halfwidth

        def to_point(s):
            q = region.center2d + (2.0 * s - 1.0) * h
            return region.plane.embed(q)

        return 2, to_point
    if isinstance(region, AxisBox):
        lo, hi = region.min_corner, region.max_corner
        return d, lambda s: lo + s * (hi - lo)
    raise TypeError(region)


def oracle_distance(line, region, n_grid=9):
    """Independent minimum distance: dense start grid + local refinement."""
    k, to_point = _region_param(region, line.dim)
    if k == 0:
        return dist_line_point(line, to_point(None))

    def f(s):
        return dist_line_point(line, to_point(np.asarray(s)))

    starts = []
    axes = [np.linspace(0.0, 1.0, n_grid)] * min(k, 3)
    if k <= 3:
        for combo in np.stack(
            np.meshgrid(*axes, indexing="ij"), axis=-1
        ).reshape(-1, k):
            starts.append(combo)
    else:
        starts = [RNG.random(k) for _ in range(200)]
        starts += [np.full(k, 0.5)]
    best = np.inf
    best_s = None
    for s in starts:
        v = f(s)
        if v < best:
            best, best_s = v, np.asarray(s, dtype=float)
    res = minimize(
        f, best_s, method="L-BFGS-B", bounds=[(0.0, 1.0)] * k,
        options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 500},
    )
    return min(best, float(res.fun))


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_distance_oracle_suite(d):
    rng = np.random.default_rng(100 + d)
    n = 250
    worst = 0.0
    for _ in range(n):
        line = random_line(d, rng)
        region = random_region(d, rng)
        got = dist_line_region(line, region)
        want = oracle_distance(line, region)
        worst = max(worst, abs(got - want))
        assert got <= want + 1e-6
        assert abs(got - want) < 1e-6, (line, region, got, want)
    assert worst < 1e-6


@pytest.mark.parametrize("d", [2, 3, 4, 6])
def test_batch_distances_match_scalar(d):
    rng = np.random.default_rng(200 + d)
    lines = [random_line(d, rng) for _ in range(50)]
    dirs = np.stack([l.direction for l in lines])
    pts = np.stack([l.anchor for l in lines])
    for _ in range(8):
        region = random_region(d, rng)
        batch = batch_dist_region(dirs, pts, region)
        for i, line in enumerate(lines):
            assert abs(batch[i] - dist_line_region(line, region)) < 1e-7


@pytest.mark.parametrize("d", [3, 4, 5])
def test_trace_membership_grid(d):
    rng = np.random.default_rng(300 + d)
    plane = PlaneSpec(d, np.concatenate([[0.0, 0.0], rng.uniform(-0.5, 0.5, d - 2)]))
    checked = 0
    for _ in range(60):
        line = random_line(d, rng, span=3.0)
        tr = trace_on_plane(line, plane)
        qx = np.linspace(-6, 6, 41)
        for x in qx[::4]:
            for y in qx[::4]:
                q = np.array([x, y])
                dist = dist_line_point(line, plane.embed(q))
                if abs(dist - 1.0) < 1e-7:
                    continue  # boundary band excluded
                assert tr.contains(q) == (dist <= 1.0), (line, q, dist, tr)
                checked += 1
    assert checked > 1000


def test_trace_parallel_strip_and_empty():
    # Line parallel to the plane at height h: strip of halfwidth sqrt(1-h^2).
    line = canonicalize_line([0.0, 2.0, 0.6], [1.0, 0.0, 0.0])
    tr = trace_on_plane(line, PlaneSpec(3))
    assert tr.contains([5.0, 2.0])
    assert tr.contains([5.0, 2.0 + np.sqrt(1 - 0.36) - 1e-6])
    assert not tr.contains([5.0, 2.0 + np.sqrt(1 - 0.36) + 1e-6])
    far = canonicalize_line([0.0, 2.0, 1.5], [1.0, 0.0, 0.0])
    assert isinstance(trace_on_plane(far, PlaneSpec(3)), EmptyTrace)


def test_trace_transversal_miss_in_high_dim():
    # In d=4 a non-parallel line can miss the plane's unit neighborhood.
    line = canonicalize_line([0.0, 0.0, 3.0, 0.0], [0.0, 0.0, 0.0, 1.0])
    assert isinstance(trace_on_plane(line, PlaneSpec(4)), EmptyTrace)
    near = canonicalize_line([0.0, 0.0, 0.5, 0.0], [0.0, 0.0, 0.0, 1.0])
    tr = trace_on_plane(near, PlaneSpec(4))
    # Disc of radius sqrt(1 - 0.25) around the origin.
    r = np.sqrt(0.75)
    assert tr.contains([r - 1e-9, 0.0])
    assert not tr.contains([r + 1e-9, 0.0])


def test_perpendicular_line_traces_unit_disc():
    line = canonicalize_line([0.3, -0.2, 5.0], [0.0, 0.0, 1.0])
    tr = trace_on_plane(line, PlaneSpec(3))
    assert tr.contains([0.3 + 0.999, -0.2])
    assert not tr.contains([0.3 + 1.001, -0.2])


def test_oblique_trace_major_axis():
    # 45-degree line: ellipse with major axis sqrt(2), minor 1.
    line = canonicalize_line([0.0, 0.0, 0.0], [1.0, 0.0, 1.0])
    tr = trace_on_plane(line, PlaneSpec(3))
    assert abs(tr.semiaxes[0] - np.sqrt(2.0)) < 1e-12
    assert abs(tr.semiaxes[1] - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# Canonical-form properties


finite = st.floats(
    min_value=-50, max_value=50, allow_nan=False, allow_infinity=False
)


@st.composite
def line_inputs(draw, d=3):
    p = np.array([draw(finite) for _ in range(d)])
    v = np.array([draw(finite) for _ in range(d)])
    if np.linalg.norm(v) < 1e-6:
        v = v + np.eye(d)[0]
    return p, v


@given(line_inputs())
@settings(max_examples=200, deadline=None)
def test_canonicalize_idempotent(pv):
    p, v = pv
    line = canonicalize_line(p, v)
    again = canonicalize_line(line.anchor, line.direction)
    np.testing.assert_allclose(again.direction, line.direction, atol=1e-12)
    np.testing.assert_allclose(again.anchor, line.anchor, atol=1e-9)


@given(line_inputs(), st.floats(min_value=-20, max_value=20),
       st.sampled_from([-3.0, -1.0, 0.5, 2.0]))
@settings(max_examples=200, deadline=None)
def test_canonicalize_parametrization_independent(pv, t, scale):
    p, v = pv
    base = canonicalize_line(p, v)
    other = canonicalize_line(p + t * v, scale * v)
    np.testing.assert_allclose(other.direction, base.direction, atol=1e-12)
    np.testing.assert_allclose(other.anchor, base.anchor, atol=1e-6)


def test_canonical_invariants():
    line = canonicalize_line([3.0, 4.0, 5.0], [-2.0, 0.0, 0.0])
    assert line.direction[0] > 0  # sign-normalized
    assert abs(np.dot(line.direction, line.anchor)) < 1e-10
    assert abs(np.linalg.norm(line.direction) - 1.0) < 1e-12


def test_zero_direction_rejected():
    with pytest.raises(ZeroDirection):
        canonicalize_line([0.0, 0.0, 0.0], [0.0, 0.0, 0.0])


def test_dimension_mismatch_rejected():
    line = canonicalize_line([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        dist_line_point(line, [0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        dist_line_region(line, Ball(np.zeros(4), 1.0))


def test_translation_equivariance():
    rng = np.random.default_rng(7)
    for _ in range(40):
        d = int(rng.integers(2, 5))
        line = random_line(d, rng)
        region = random_region(d, rng)
        v = rng.uniform(-4, 4, d)
        v[:2] = np.round(v[:2])  # keep planar squares in coordinate planes
        if isinstance(region, PlanarSquare):
            v[:2] = 0.0
            moved = translate_region(region, v)
        else:
            moved = translate_region(region, v)
        shifted = canonicalize_line(line.anchor + v, line.direction)
        assert abs(
            dist_line_region(line, region) - dist_line_region(shifted, moved)
        ) < 1e-9


def test_cylinder_hits_examples():
    axis = canonicalize_line([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    assert cylinder_hits(axis, SinglePoint(np.array([10.0, 0.5, 0.0])))
    assert not cylinder_hits(axis, SinglePoint(np.array([0.0, 1.5, 0.0])))
    assert cylinder_hits(axis, Ball(np.array([0.0, 2.5, 0.0]), 1.5))
    assert not cylinder_hits(axis, Ball(np.array([0.0, 2.51, 0.0]), 1.5))


def test_bounding_sphere_contains_region_samples():
    rng = np.random.default_rng(11)
    for _ in range(40):
        d = int(rng.integers(2, 5))
        region = random_region(d, rng)
        c, r = bounding_sphere(region)
        k, to_point = _region_param(region, d)
        for _ in range(20):
            s = rng.random(k) if k else None
            p = to_point(s)
            assert np.linalg.norm(p - c) <= r + 1e-9


def test_distance_to_ball_is_point_distance_minus_radius():
    line = canonicalize_line([0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    assert abs(dist_line_region(line, Ball(np.array([0.0, 5.0, 0.0]), 2.0)) - 3.0) < 1e-12
    assert dist_line_region(line, Ball(np.array([0.0, 1.0, 0.0]), 2.0)) == 0.0
