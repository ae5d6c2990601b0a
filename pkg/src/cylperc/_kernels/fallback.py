"""Pure-numpy occupancy kernels (fallback when the compiled core is absent).

Both kernels mark a grid cell occupied iff its CENTER lies within distance 1
of some line; the compiled twins in _occupancy.pyx implement the identical
contract and must agree bit-for-bit.
"""

from __future__ import annotations

import numpy as np

_PARALLEL_SQ = 1e-18


def _line_plane_params(u, a, plane_offset):
    u1, u2 = u[0], u[1]
    ups = max(0.0, 1.0 - u1 * u1 - u2 * u2)
    cperp = plane_offset[2:] - a[2:]
    kdot = float(np.dot(cperp, u[2:]))
    cperp_sq = float(np.dot(cperp, cperp))
    return u1, u2, ups, kdot, cperp_sq


def _exact_slice_test(xs, ys, u, a, kdot, cperp_sq):
    """dist^2 from embedded grid points to the line, <= 1 mask."""
    wx = xs - a[0]
    wy = ys - a[1]
    proj = wx * u[0] + wy * u[1] + kdot
    d2 = wx * wx + wy * wy + cperp_sq - proj * proj
    return d2 <= 1.0


def occupy_slice(dirs, anchors, plane_offset, x0, y0, eps, nx, ny):
    """Occupancy bitmap (ny, nx) of the plane trace of all cylinders.

    Cell (j, i) center is (x0 + (i+0.5) eps, y0 + (j+0.5) eps) embedded via
    the plane offset.
    """
    out = np.zeros((ny, nx), dtype=np.uint8)
    plane_offset = np.asarray(plane_offset, dtype=np.float64)
    cx = x0 + (np.arange(nx) + 0.5) * eps
    cy = y0 + (np.arange(ny) + 0.5) * eps
    for k in range(dirs.shape[0]):
        u = dirs[k]
        a = anchors[k]
        u1, u2, ups, kdot, cperp_sq = _line_plane_params(u, a, plane_offset)
        if ups > _PARALLEL_SQ:
            t = kdot / ups
            v0x, v0y = t * u1, t * u2
            q0x, q0y = a[0] + v0x, a[1] + v0y
            h2 = v0x * v0x + v0y * v0y + cperp_sq - (v0x * u1 + v0y * u2 + kdot) ** 2
            if h2 >= 1.0:
                continue
            s2 = 1.0 - h2
            ext_x = np.sqrt(s2 * (1.0 + u1 * u1 / ups)) + eps
            ext_y = np.sqrt(s2 * (1.0 + u2 * u2 / ups)) + eps
            i_lo = max(0, int(np.floor((q0x - ext_x - x0) / eps - 0.5)))
            i_hi = min(nx - 1, int(np.ceil((q0x + ext_x - x0) / eps - 0.5)))
            j_lo = max(0, int(np.floor((q0y - ext_y - y0) / eps - 0.5)))
            j_hi = min(ny - 1, int(np.ceil((q0y + ext_y - y0) / eps - 0.5)))
            if i_lo > i_hi or j_lo > j_hi:
                continue
            xs = cx[i_lo : i_hi + 1][None, :]
            ys = cy[j_lo : j_hi + 1][:, None]
            hit = _exact_slice_test(xs, ys, u, a, kdot, cperp_sq)
            np.logical_or(
                out[j_lo : j_hi + 1, i_lo : i_hi + 1],
                hit,
                out=out[j_lo : j_hi + 1, i_lo : i_hi + 1].view(bool),
            )
        else:
            # Parallel to the plane: unbounded strip, exact test on the grid.
            if cperp_sq >= 1.0 + 1e-9:
                continue
            hit = _exact_slice_test(cx[None, :], cy[:, None], u, a, kdot, cperp_sq)
            np.logical_or(out, hit, out=out.view(bool))
    return out


def _sphere_stencil(d, eps):
    r = np.sqrt(1.0 + eps * eps / 4.0) + eps * np.sqrt(d) / 2.0 + 1e-9
    m = int(np.ceil(r / eps))
    ax = np.arange(-m, m + 1)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    keep = np.einsum("ij,ij->i", offs, offs) * eps * eps <= r * r
    return offs[keep]


def occupy_grid(dirs, anchors, origin, eps, shape):
    """d-dimensional occupancy array with the given shape (C index order).

    Cell center along axis i is origin[i] + (idx_i + 0.5) * eps.
    """
    shape = tuple(int(s) for s in shape)
    d = dirs.shape[1]
    origin = np.asarray(origin, dtype=np.float64)
    out = np.zeros(shape, dtype=np.uint8)
    if dirs.shape[0] == 0:
        return out
    offs = _sphere_stencil(d, eps)
    hi = origin + np.array(shape) * eps
    shape_arr = np.array(shape)
    for k in range(dirs.shape[0]):
        u = dirs[k]
        a = anchors[k]
        t0, t1 = -np.inf, np.inf
        skip = False
        for i in range(d):
            if abs(u[i]) > 1e-12:
                ta = (origin[i] - 1.0 - a[i]) / u[i]
                tb = (hi[i] + 1.0 - a[i]) / u[i]
                t0 = max(t0, min(ta, tb))
                t1 = min(t1, max(ta, tb))
            elif not (origin[i] - 1.0 <= a[i] <= hi[i] + 1.0):
                skip = True
                break
        if skip or t0 > t1:
            continue
        n_steps = int(np.ceil((t1 - t0) / eps)) + 1
        ts = np.linspace(t0, t1, n_steps)
        samples = a[None, :] + ts[:, None] * u[None, :]
        base = np.floor((samples - origin) / eps).astype(np.int64)
        cand = (base[:, None, :] + offs[None, :, :]).reshape(-1, d)
        ok = np.all((cand >= 0) & (cand < shape_arr), axis=1)
        cand = cand[ok]
        if cand.shape[0] == 0:
            continue
        flat = np.unique(np.ravel_multi_index(cand.T, shape))
        centers = origin + (np.stack(np.unravel_index(flat, shape), axis=1) + 0.5) * eps
        w = centers - a
        proj = w @ u
        d2 = np.einsum("ij,ij->i", w, w) - proj * proj
        out.ravel()[flat[d2 <= 1.0]] = 1
    return out
