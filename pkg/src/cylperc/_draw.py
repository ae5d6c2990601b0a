"""Shared low-level sampling primitives for line draws."""

from __future__ import annotations

from math import gamma, pi

import numpy as np

from .geometry import UNIT_NORM_TOL


def ball_volume(m: int) -> float:
    """Lebesgue volume of the unit m-ball, pi^{m/2} / Gamma(m/2 + 1)."""
    return pi ** (m / 2.0) / gamma(m / 2.0 + 1.0)


def canonicalize_batch(dirs: np.ndarray, pts: np.ndarray):
    """Vectorized canonical form: unit sign-normalized directions + anchors."""
    dirs = np.asarray(dirs, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = dirs / norms
    if dirs.shape[0]:
        first = np.argmax(np.abs(dirs) > UNIT_NORM_TOL, axis=1)
        lead = dirs[np.arange(dirs.shape[0]), first]
        dirs = dirs * np.where(lead >= 0, 1.0, -1.0)[:, None]
    anchors = pts - np.einsum("ij,ij->i", pts, dirs)[:, None] * dirs
    return dirs, anchors


def offsets_in_disc(dirs: np.ndarray, rho: float, rng) -> np.ndarray:
    """Uniform offsets in the (d-1)-disc of radius rho orthogonal to each row."""
    n, d = dirs.shape
    h = rng.standard_normal((n, d))
    h -= np.einsum("ij,ij->i", h, dirs)[:, None] * dirs
    h /= np.linalg.norm(h, axis=1, keepdims=True)
    radius = rho * rng.random(n) ** (1.0 / (d - 1))
    return h * radius[:, None]


def uniform_directions(d: int, n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def segment_stadium_offsets(dirs: np.ndarray, p0, p1, rng):
    """Offsets hitting a segment's unit cylinder, per direction row.

    For direction u, the lines within distance 1 of the segment [p0, p1]
    project (in the hyperplane orthogonal to u) onto the stadium
    P(segment) + unit (d-1)-ball, whose volume is
    kappa_{d-1} + |P(p1-p0)| kappa_{d-2}.  Returns points on the sampled
    lines and each line's stadium volume (the direction-conditional mass).
    """
    n, d = dirs.shape
    m = d - 1
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    e = p1 - p0
    e_perp = e[None, :] - (dirs @ e)[:, None] * dirs
    length = np.linalg.norm(e_perp, axis=1)
    mass = ball_volume(m) + length * ball_volume(m - 1)
    pts = np.empty((n, d))
    in_cyl = rng.random(n) * mass < length * ball_volume(m - 1)

    # Straight part: point along the segment plus an offset orthogonal to
    # both the direction and the projected segment axis.
    idx = np.nonzero(in_cyl)[0]
    if idx.size:
        t = rng.random(idx.size)
        base = p0[None, :] + t[:, None] * e[None, :]
        if m - 1 > 0:
            g = rng.standard_normal((idx.size, d))
            g -= np.einsum("ij,ij->i", g, dirs[idx])[:, None] * dirs[idx]
            axis = e_perp[idx] / length[idx][:, None]
            g -= np.einsum("ij,ij->i", g, axis)[:, None] * axis
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            radius = rng.random(idx.size) ** (1.0 / (m - 1))
            base = base + g * radius[:, None]
        pts[idx] = base

    # End caps: uniform point of the unit (d-1)-ball attached to whichever
    # endpoint makes it an outward hemisphere.
    idx = np.nonzero(~in_cyl)[0]
    if idx.size:
        g = rng.standard_normal((idx.size, d))
        g -= np.einsum("ij,ij->i", g, dirs[idx])[:, None] * dirs[idx]
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        z = g * (rng.random(idx.size) ** (1.0 / m))[:, None]
        outward = np.einsum("ij,ij->i", z, e_perp[idx]) >= 0.0
        pts[idx] = np.where(outward[:, None], p1[None, :], p0[None, :]) + z
    return pts, mass


def draw_envelope_lines(d: int, center, rho: float, n: int, rng):
    """n i.i.d. lines from the normalized invariant measure on lines passing
    within rho of `center`: isotropic direction, offset uniform in the
    orthogonal (d-1)-disc of radius rho.

    Returns (directions, points_on_line); directions are unit but not
    sign-canonicalized (hit tests do not need the canonical sign).
    """
    center = np.asarray(center, dtype=np.float64)
    dirs = uniform_directions(d, n, rng)
    pts = offsets_in_disc(dirs, rho, rng)
    pts += center
    return dirs, pts
