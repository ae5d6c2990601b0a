# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled occupancy kernels; contract identical to fallback.py."""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, fabs, floor, sqrt

cnp.import_array()

cdef double PARALLEL_SQ = 1e-18


def occupy_slice(double[:, ::1] dirs, double[:, ::1] anchors,
                 double[::1] plane_offset, double x0, double y0,
                 double eps, Py_ssize_t nx, Py_ssize_t ny):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] out_arr = np.zeros((ny, nx), dtype=np.uint8)
    cdef unsigned char[:, ::1] out = out_arr
    cdef Py_ssize_t n = dirs.shape[0]
    cdef Py_ssize_t d = dirs.shape[1]
    cdef Py_ssize_t k, i, j, i_lo, i_hi, j_lo, j_hi, m
    cdef double u1, u2, ups, kdot, cperp_sq, t, v0x, v0y, q0x, q0y, h2, s2
    cdef double ext_x, ext_y, cx, cy, wx, wy, proj, d2, ax, ay

    for k in range(n):
        u1 = dirs[k, 0]
        u2 = dirs[k, 1]
        ax = anchors[k, 0]
        ay = anchors[k, 1]
        ups = 1.0 - u1 * u1 - u2 * u2
        if ups < 0.0:
            ups = 0.0
        kdot = 0.0
        cperp_sq = 0.0
        for m in range(2, d):
            kdot += (plane_offset[m] - anchors[k, m]) * dirs[k, m]
            cperp_sq += (plane_offset[m] - anchors[k, m]) ** 2

        if ups > PARALLEL_SQ:
            t = kdot / ups
            v0x = t * u1
            v0y = t * u2
            q0x = ax + v0x
            q0y = ay + v0y
            h2 = v0x * v0x + v0y * v0y + cperp_sq \
                - (v0x * u1 + v0y * u2 + kdot) ** 2
            if h2 >= 1.0:
                continue
            s2 = 1.0 - h2
            ext_x = sqrt(s2 * (1.0 + u1 * u1 / ups)) + eps
            ext_y = sqrt(s2 * (1.0 + u2 * u2 / ups)) + eps
            i_lo = <Py_ssize_t>floor((q0x - ext_x - x0) / eps - 0.5)
            i_hi = <Py_ssize_t>ceil((q0x + ext_x - x0) / eps - 0.5)
            j_lo = <Py_ssize_t>floor((q0y - ext_y - y0) / eps - 0.5)
            j_hi = <Py_ssize_t>ceil((q0y + ext_y - y0) / eps - 0.5)
        else:
            if cperp_sq >= 1.0 + 1e-9:
                continue
            i_lo = 0
            i_hi = nx - 1
            j_lo = 0
            j_hi = ny - 1
        if i_lo < 0:
            i_lo = 0
        if j_lo < 0:
            j_lo = 0
        if i_hi > nx - 1:
            i_hi = nx - 1
        if j_hi > ny - 1:
            j_hi = ny - 1
        for j in range(j_lo, j_hi + 1):
            cy = y0 + (j + 0.5) * eps
            wy = cy - ay
            for i in range(i_lo, i_hi + 1):
                if out[j, i]:
                    continue
                cx = x0 + (i + 0.5) * eps
                wx = cx - ax
                proj = wx * u1 + wy * u2 + kdot
                d2 = wx * wx + wy * wy + cperp_sq - proj * proj
                if d2 <= 1.0:
                    out[j, i] = 1
    return out_arr


def occupy_grid(double[:, ::1] dirs, double[:, ::1] anchors,
                double[::1] origin, double eps, shape):
    shape = tuple(int(s) for s in shape)
    cdef cnp.ndarray out_arr = np.zeros(shape, dtype=np.uint8)
    cdef unsigned char[::1] out = out_arr.ravel()
    cdef Py_ssize_t d = dirs.shape[1]
    cdef Py_ssize_t n = dirs.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] shp = np.array(shape, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] strides = np.ones(d, dtype=np.int64)
    cdef Py_ssize_t i, k, s, c, nc
    for i in range(d - 2, -1, -1):
        strides[i] = strides[i + 1] * shp[i + 1]

    # Sphere stencil of integer offsets covering every cell center within
    # distance 1 of any point of the walked segment.
    cdef double r = sqrt(1.0 + eps * eps / 4.0) + eps * sqrt(<double>d) / 2.0 + 1e-9
    cdef Py_ssize_t mrad = <Py_ssize_t>ceil(r / eps)
    ax = np.arange(-mrad, mrad + 1)
    grids = np.meshgrid(*([ax] * d), indexing="ij")
    offs_py = np.stack([g.ravel() for g in grids], axis=1)
    offs_py = offs_py[np.einsum("ij,ij->i", offs_py, offs_py) * eps * eps <= r * r]
    cdef cnp.ndarray[cnp.int64_t, ndim=2] offs = np.ascontiguousarray(offs_py, dtype=np.int64)
    cdef Py_ssize_t noffs = offs.shape[0]

    cdef double t0, t1, ta, tb, tmp, tstep, tcur, proj, d2, w
    cdef Py_ssize_t nsteps, base_i, idx_i
    cdef bint skip, inb
    cdef cnp.ndarray[cnp.int64_t, ndim=1] base = np.zeros(d, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] cand = np.zeros(d, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hi = np.zeros(d, dtype=np.float64)
    cdef Py_ssize_t flat

    for i in range(d):
        hi[i] = origin[i] + shp[i] * eps

    for k in range(n):
        t0 = -1e300
        t1 = 1e300
        skip = False
        for i in range(d):
            if fabs(dirs[k, i]) > 1e-12:
                ta = (origin[i] - 1.0 - anchors[k, i]) / dirs[k, i]
                tb = (hi[i] + 1.0 - anchors[k, i]) / dirs[k, i]
                if ta > tb:
                    tmp = ta
                    ta = tb
                    tb = tmp
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
            elif anchors[k, i] < origin[i] - 1.0 or anchors[k, i] > hi[i] + 1.0:
                skip = True
                break
        if skip or t0 > t1:
            continue
        nsteps = <Py_ssize_t>ceil((t1 - t0) / eps) + 1
        if nsteps < 2:
            nsteps = 2
        tstep = (t1 - t0) / (nsteps - 1)
        for s in range(nsteps):
            tcur = t0 + s * tstep
            for i in range(d):
                base[i] = <Py_ssize_t>floor(
                    (anchors[k, i] + tcur * dirs[k, i] - origin[i]) / eps
                )
            for c in range(noffs):
                flat = 0
                inb = True
                for i in range(d):
                    idx_i = base[i] + offs[c, i]
                    if idx_i < 0 or idx_i >= shp[i]:
                        inb = False
                        break
                    cand[i] = idx_i
                    flat += idx_i * strides[i]
                if not inb or out[flat]:
                    continue
                proj = 0.0
                d2 = 0.0
                for i in range(d):
                    w = origin[i] + (cand[i] + 0.5) * eps - anchors[k, i]
                    proj += w * dirs[k, i]
                    d2 += w * w
                d2 -= proj * proj
                if d2 <= 1.0:
                    out[flat] = 1
    return out_arr
