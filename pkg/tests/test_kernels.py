"""Compiled and pure-python occupancy kernels must agree bit for bit, and
both must implement the exact cell-center membership test."""

import numpy as np
import pytest

from cylperc._draw import canonicalize_batch, draw_envelope_lines
from cylperc._kernels import BACKEND
from cylperc._kernels import fallback
from cylperc.geometry import batch_dist_point

try:
    from cylperc._kernels import _occupancy as compiled
except ImportError:
    compiled = None

needs_compiled = pytest.mark.skipif(
    compiled is None, reason="compiled kernel not built"
)


def random_lines(d, n, seed, include_axis_parallel=True):
    rng = np.random.default_rng(seed)
    dirs, pts = draw_envelope_lines(d, np.zeros(d), 8.0, n, rng)
    if include_axis_parallel and n >= d:
        for i in range(d):
            dirs[i] = 0.0
            dirs[i][i] = 1.0
    dirs, anchors = canonicalize_batch(dirs, pts)
    return np.ascontiguousarray(dirs), np.ascontiguousarray(anchors)


def brute_force_slice(dirs, anchors, offset, x0, y0, eps, nx, ny):
    d = dirs.shape[1]
    out = np.zeros((ny, nx), dtype=np.uint8)
    for iy in range(ny):
        for ix in range(nx):
            p = np.array(offset, dtype=float)
            p[0] = x0 + (ix + 0.5) * eps
            p[1] = y0 + (iy + 0.5) * eps
            if dirs.shape[0] and (batch_dist_point(dirs, anchors, p) <= 1.0).any():
                out[iy, ix] = 1
    return out


@pytest.mark.parametrize("d", [2, 3, 4])
def test_fallback_slice_matches_brute_force(d):
    dirs, anchors = random_lines(d, 25, 1000 + d)
    offset = np.zeros(d)
    if d > 2:
        offset[2:] = 0.3
    got = fallback.occupy_slice(dirs, anchors, offset, -3.0, -3.0, 0.4, 15, 15)
    want = brute_force_slice(dirs, anchors, offset, -3.0, -3.0, 0.4, 15, 15)
    np.testing.assert_array_equal(got, want)
    assert got.dtype == np.uint8


@pytest.mark.parametrize("d", [2, 3, 4])
def test_fallback_grid_matches_brute_force(d):
    dirs, anchors = random_lines(d, 15, 2000 + d)
    origin = np.full(d, -3.0)
    n = 8
    got = fallback.occupy_grid(dirs, anchors, origin, 0.75, (n,) * d)
    centers = np.stack(
        np.meshgrid(
            *[origin[i] + (np.arange(n) + 0.5) * 0.75 for i in range(d)],
            indexing="ij",
        ),
        axis=-1,
    ).reshape(-1, d)
    want = np.zeros(len(centers), dtype=np.uint8)
    for j, p in enumerate(centers):
        if (batch_dist_point(dirs, anchors, p) <= 1.0).any():
            want[j] = 1
    np.testing.assert_array_equal(got.reshape(-1), want)


@needs_compiled
@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_backends_bit_identical_slice(d):
    for seed in range(5):
        dirs, anchors = random_lines(d, 60, 3000 + 10 * d + seed)
        offset = np.zeros(d)
        if d > 2:
            offset[2:] = -0.2
        args = (dirs, anchors, offset, -5.0, -5.0, 0.125, 80, 80)
        np.testing.assert_array_equal(
            compiled.occupy_slice(*args), fallback.occupy_slice(*args)
        )


@needs_compiled
@pytest.mark.parametrize("d", [2, 3, 4])
def test_backends_bit_identical_grid(d):
    for seed in range(3):
        dirs, anchors = random_lines(d, 30, 4000 + 10 * d + seed)
        origin = np.full(d, -4.0)
        shape = (20,) * d if d < 4 else (12,) * d
        args = (dirs, anchors, origin, 0.4, shape)
        np.testing.assert_array_equal(
            compiled.occupy_grid(*args), fallback.occupy_grid(*args)
        )


@needs_compiled
def test_backends_identical_with_no_lines():
    d = 3
    empty = np.empty((0, d))
    a = compiled.occupy_slice(empty, empty, np.zeros(d), -1.0, -1.0, 0.25, 8, 8)
    b = fallback.occupy_slice(empty, empty, np.zeros(d), -1.0, -1.0, 0.25, 8, 8)
    np.testing.assert_array_equal(a, b)
    assert a.sum() == 0


def test_backend_reported():
    assert BACKEND in ("cython", "python")
    import cylperc

    assert cylperc.kernel_backend == BACKEND
