"""Exact geometry of lines and unit-radius cylinders in R^d.

A line is stored canonically as a unit direction (sign-normalized) plus the
point of the line closest to the origin.  The cylinder around a line is the
set of points within Euclidean distance 1 of it, so every hit test reduces
to a line-to-region distance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DimensionMismatch, OutOfRange, ZeroDirection

UNIT_NORM_TOL = 1e-12
ANCHOR_ORTHO_TOL = 1e-10
PARALLEL_TOL = 1e-9


def _as_vector(x, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be a flat coordinate vector")
    if not np.all(np.isfinite(v)):
        raise OutOfRange(f"{name} has non-finite coordinates")
    return v


def canonical_sign(direction: np.ndarray) -> float:
    """Sign making the first coordinate with |x| > 1e-12 positive."""
    for x in direction:
        if abs(x) > UNIT_NORM_TOL:
            return 1.0 if x > 0 else -1.0
    raise ZeroDirection("direction has no coordinate above tolerance")


@dataclass(frozen=True)
class CanonicalLine:
    """A line in R^d: sign-normalized unit direction + closest point to origin."""

    direction: np.ndarray
    anchor: np.ndarray

    def __post_init__(self):
        d = _as_vector(self.direction, "direction")
        a = _as_vector(self.anchor, "anchor")
        if d.shape != a.shape:
            raise DimensionMismatch("direction and anchor dimensions differ")
        if abs(np.dot(d, d) - 1.0) > 1e-9:
            raise ZeroDirection("direction is not unit length")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "anchor", a)

    @property
    def dim(self) -> int:
        return self.direction.shape[0]

    def point_at(self, t: float) -> np.ndarray:
        return self.anchor + t * self.direction


@dataclass(frozen=True)
class PlaneSpec:
    """The coordinate 2-plane spanned by e1, e2, translated by `offset`.

    The offset must have zero components in the two spanned coordinates.
    """

    dim: int
    offset: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.dim < 2 or self.dim > 8:
            raise OutOfRange("plane dimension must be in [2, 8]")
        off = (
            np.zeros(self.dim)
            if self.offset is None
            else _as_vector(self.offset, "offset")
        )
        if off.shape[0] != self.dim:
            raise DimensionMismatch("offset length must equal ambient dimension")
        if np.any(np.abs(off[:2]) > 0):
            raise OutOfRange("offset must vanish in the spanned coordinates")
        object.__setattr__(self, "offset", off)

    def embed(self, q) -> np.ndarray:
        """Map 2D plane coordinates to ambient coordinates."""
        q = np.asarray(q, dtype=np.float64)
        p = self.offset.copy()
        p[:2] += q
        return p

    def embed_many(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        out = np.tile(self.offset, (q.shape[0], 1))
        out[:, :2] += q
        return out


# ---------------------------------------------------------------------------
# Hit regions


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vector(self.center, "center"))
        if self.radius < 0:
            raise OutOfRange("ball radius must be >= 0")


@dataclass(frozen=True)
class AxisBox:
    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.min_corner, "min_corner")
        hi = _as_vector(self.max_corner, "max_corner")
        if lo.shape != hi.shape:
            raise DimensionMismatch("box corners have different dimensions")
        if np.any(lo > hi):
            raise OutOfRange("box min corner must be componentwise <= max corner")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)


@dataclass(frozen=True)
class PlanarSquare:
    """Closed l_inf-ball of radius `halfwidth` in a coordinate 2-plane."""

    plane: PlaneSpec
    center2d: np.ndarray
    halfwidth: float

    def __post_init__(self):
        c = _as_vector(self.center2d, "center2d")
        if c.shape[0] != 2:
            raise DimensionMismatch("center2d must have 2 coordinates")
        if self.halfwidth <= 0:
            raise OutOfRange("halfwidth must be positive")
        object.__setattr__(self, "center2d", c)

    def corners(self) -> np.ndarray:
        """The four corners, in ambient coordinates, in cyclic order."""
        h = self.halfwidth
        offs = np.array([[-h, -h], [h, -h], [h, h], [-h, h]])
        return self.plane.embed_many(self.center2d + offs)


@dataclass(frozen=True)
class Segment:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _as_vector(self.a, "a")
        b = _as_vector(self.b, "b")
        if a.shape != b.shape:
            raise DimensionMismatch("segment endpoints have different dimensions")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class SinglePoint:
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", _as_vector(self.p, "p"))


HitRegion = Union[Ball, AxisBox, PlanarSquare, Segment, SinglePoint]


def region_dim(r: HitRegion) -> int:
    if isinstance(r, Ball):
        return r.center.shape[0]
    if isinstance(r, AxisBox):
        return r.min_corner.shape[0]
    if isinstance(r, PlanarSquare):
        return r.plane.dim
    if isinstance(r, Segment):
        return r.a.shape[0]
    if isinstance(r, SinglePoint):
        return r.p.shape[0]
    raise TypeError(f"not a hit region: {r!r}")


def bounding_sphere(r: HitRegion) -> tuple[np.ndarray, float]:
    """(center, radius) of a ball containing the region."""
    if isinstance(r, Ball):
        return r.center, r.radius
    if isinstance(r, AxisBox):
        c = 0.5 * (r.min_corner + r.max_corner)
        return c, float(np.linalg.norm(r.max_corner - c))
    if isinstance(r, PlanarSquare):
        return r.plane.embed(r.center2d), r.halfwidth * np.sqrt(2.0)
    if isinstance(r, Segment):
        c = 0.5 * (r.a + r.b)
        return c, float(np.linalg.norm(r.b - c))
    if isinstance(r, SinglePoint):
        return r.p, 0.0
    raise TypeError(f"not a hit region: {r!r}")


def translate_region(r: HitRegion, v: np.ndarray) -> HitRegion:
    v = np.asarray(v, dtype=np.float64)
    if isinstance(r, Ball):
        return Ball(r.center + v, r.radius)
    if isinstance(r, AxisBox):
        return AxisBox(r.min_corner + v, r.max_corner + v)
    if isinstance(r, PlanarSquare):
        off = r.plane.offset.copy()
        off[2:] += v[2:]
        return PlanarSquare(
            PlaneSpec(r.plane.dim, off), r.center2d + v[:2], r.halfwidth
        )
    if isinstance(r, Segment):
        return Segment(r.a + v, r.b + v)
    if isinstance(r, SinglePoint):
        return SinglePoint(r.p + v)
    raise TypeError(f"not a hit region: {r!r}")


# ---------------------------------------------------------------------------
# Conic obstacles (traces of cylinders on a 2-plane)


@dataclass(frozen=True)
class Ellipse:
    center2d: np.ndarray
    semiaxes: tuple[float, float]  # (major, minor), major >= minor
    angle: float  # orientation of the major axis, radians

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=np.float64) - self.center2d
        c, s = np.cos(self.angle), np.sin(self.angle)
        x = c * q[0] + s * q[1]
        y = -s * q[0] + c * q[1]
        a, b = self.semiaxes
        return (x / a) ** 2 + (y / b) ** 2 <= 1.0


@dataclass(frozen=True)
class Strip:
    """Band of given halfwidth around a line in the plane."""

    point2d: np.ndarray
    direction2d: np.ndarray  # unit
    halfwidth: float

    def contains(self, q) -> bool:
        q = np.asarray(q, dtype=np.float64) - self.point2d
        n = q - np.dot(q, self.direction2d) * self.direction2d
        return float(np.linalg.norm(n)) <= self.halfwidth


@dataclass(frozen=True)
class EmptyTrace:
    def contains(self, q) -> bool:
        return False


ConicObstacle = Union[Ellipse, Strip, EmptyTrace]


# ---------------------------------------------------------------------------
# Core operations


def canonicalize_line(point_on_line, raw_direction) -> CanonicalLine:
    """Canonical representative of the line through a point with a direction.

    The same geometric line yields an identical representation regardless of
    the input parametrization (point choice, direction scale and sign).
    """
    p = _as_vector(point_on_line, "point_on_line")
    v = _as_vector(raw_direction, "raw_direction")
    if p.shape != v.shape:
        raise DimensionMismatch("point and direction dimensions differ")
    norm = np.linalg.norm(v)
    if norm <= UNIT_NORM_TOL:
        raise ZeroDirection("direction norm below tolerance")
    u = v / norm
    u = u * canonical_sign(u)
    anchor = p - np.dot(p, u) * u
    # Exact-zero snap keeps representations identical across parametrizations.
    anchor[np.abs(anchor) < 1e-15] = 0.0
    return CanonicalLine(u, anchor)


def dist_line_point(line: CanonicalLine, p) -> float:
    p = _as_vector(p, "p")
    if p.shape[0] != line.dim:
        raise DimensionMismatch("point dimension differs from line dimension")
    w = p - line.anchor
    d2 = np.dot(w, w) - np.dot(w, line.direction) ** 2
    return float(np.sqrt(max(d2, 0.0)))


def _dist_line_segment(line: CanonicalLine, a: np.ndarray, b: np.ndarray) -> float:
    # dist^2 from line to a + s(b-a) is a convex quadratic in s on [0, 1]
    u = line.direction
    v = b - a
    w = a - line.anchor
    wu = np.dot(w, u)
    vu = np.dot(v, u)
    A = np.dot(v, v) - vu * vu
    B = 2.0 * (np.dot(w, v) - wu * vu)
    C = np.dot(w, w) - wu * wu
    if A > 1e-14:
        s = min(1.0, max(0.0, -B / (2.0 * A)))
    else:
        s = 0.0
    d2 = min(A * s * s + B * s + C, C, A + B + C)
    return float(np.sqrt(max(d2, 0.0)))


def _min_quadratic_over_box(H, g, c, lo, hi, iters=200, tol=1e-14):
    """Minimize 0.5 s^T H s + g.s + c over the box [lo, hi] (H PSD).

    Exact coordinate descent; converges for smooth convex quadratics over a
    box and is robust to a singular H (line parallel to the region's plane).
    """
    s = np.clip(-g / np.maximum(np.diag(H), 1e-30), lo, hi)
    k = len(g)
    for _ in range(iters):
        delta = 0.0
        for i in range(k):
            hii = H[i, i]
            if hii <= 1e-30:
                continue
            grad_i = g[i] + np.dot(H[i], s) - hii * s[i]
            new = min(hi[i], max(lo[i], -grad_i / hii))
            delta = max(delta, abs(new - s[i]))
            s[i] = new
        if delta < tol:
            break
    return float(0.5 * np.dot(s, H @ s) + np.dot(g, s) + c)


def _dist2_line_box_params(line: CanonicalLine, origin, axes):
    """Quadratic for dist^2(line, origin + sum s_i axes_i) in the s variables."""
    u = line.direction
    w = origin - line.anchor
    wu = np.dot(w, u)
    au = axes @ u  # (k,)
    # dist^2 = |w + A s|^2 - (wu + au.s)^2 = 0.5 s^T H s + g.s + c
    H = 2.0 * (axes @ axes.T - np.outer(au, au))
    g = 2.0 * (axes @ w - wu * au)
    c = np.dot(w, w) - wu * wu
    return H, g, c


def dist_line_region(line: CanonicalLine, region: HitRegion) -> float:
    """Infimum over points of the region of their distance to the line."""
    if region_dim(region) != line.dim:
        raise DimensionMismatch("region dimension differs from line dimension")
    if isinstance(region, SinglePoint):
        return dist_line_point(line, region.p)
    if isinstance(region, Ball):
        return max(0.0, dist_line_point(line, region.center) - region.radius)
    if isinstance(region, Segment):
        return _dist_line_segment(line, region.a, region.b)
    if isinstance(region, PlanarSquare):
        e = np.zeros((2, line.dim))
        e[0, 0] = 1.0
        e[1, 1] = 1.0
        origin = region.plane.embed(region.center2d)
        H, g, c = _dist2_line_box_params(line, origin, e)
        h = region.halfwidth
        d2 = _min_quadratic_over_box(H, g, c, np.array([-h, -h]), np.array([h, h]))
        return float(np.sqrt(max(d2, 0.0)))
    if isinstance(region, AxisBox):
        d = line.dim
        axes = np.eye(d)
        origin = 0.5 * (region.min_corner + region.max_corner)
        half = 0.5 * (region.max_corner - region.min_corner)
        H, g, c = _dist2_line_box_params(line, origin, axes)
        d2 = _min_quadratic_over_box(H, g, c, -half, half)
        return float(np.sqrt(max(d2, 0.0)))
    raise TypeError(f"not a hit region: {region!r}")


def cylinder_hits(line: CanonicalLine, region: HitRegion) -> bool:
    """True iff the closed unit cylinder around the line meets the region."""
    return dist_line_region(line, region) <= 1.0


def trace_on_plane(line: CanonicalLine, plane: PlaneSpec) -> ConicObstacle:
    """The set C(line) ∩ plane in plane coordinates.

    Transversal lines trace an ellipse; lines parallel to the plane at
    distance h < 1 trace a strip of halfwidth sqrt(1 - h^2); otherwise the
    trace is empty.  In d >= 4 a transversal line can still miss the plane
    by a positive distance h, shrinking both semiaxes by sqrt(1 - h^2).
    """
    if plane.dim != line.dim:
        raise DimensionMismatch("plane dimension differs from line dimension")
    u = line.direction
    u_par = u[:2]
    u_perp_sq = max(0.0, 1.0 - float(np.dot(u_par, u_par)))

    if u_perp_sq <= PARALLEL_TOL**2:
        # Parallel: the in-plane projection of the line, thickened.
        h2 = max(0.0, float(np.dot(line.anchor[2:] - plane.offset[2:],
                                   line.anchor[2:] - plane.offset[2:])))
        if h2 >= 1.0:
            return EmptyTrace()
        norm_par = float(np.linalg.norm(u_par))
        dir2d = u_par / norm_par
        return Strip(line.anchor[:2].copy(), dir2d, float(np.sqrt(1.0 - h2)))

    # Transversal: dist^2 to the line as a function of in-plane q is
    # (q - q0)^T (I2 - u_par u_par^T) (q - q0) + h^2.
    c_perp = plane.offset[2:] - line.anchor[2:]
    k = float(np.dot(c_perp, u[2:]))
    v0 = (k / u_perp_sq) * u_par
    q0 = line.anchor[:2] + v0
    h2 = float(np.dot(v0, v0) + np.dot(c_perp, c_perp) - (np.dot(v0, u_par) + k) ** 2)
    h2 = max(0.0, h2)
    if h2 >= 1.0:
        return EmptyTrace()
    scale = np.sqrt(1.0 - h2)
    major = scale / np.sqrt(u_perp_sq)
    minor = scale
    norm_par = float(np.linalg.norm(u_par))
    angle = 0.0 if norm_par <= PARALLEL_TOL else float(np.arctan2(u_par[1], u_par[0]))
    return Ellipse(q0, (float(major), float(minor)), angle)


# ---------------------------------------------------------------------------
# Batched variants over line arrays (directions (n,d), points-on-line (n,d));
# these are the workhorses of the Monte Carlo estimators.


def batch_dist_point(dirs: np.ndarray, pts: np.ndarray, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    w = p - pts
    d2 = np.einsum("ij,ij->i", w, w) - np.einsum("ij,ij->i", w, dirs) ** 2
    return np.sqrt(np.maximum(d2, 0.0))


def batch_dist_segment(dirs, pts, a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    v = b - a
    w = a - pts
    wu = np.einsum("ij,ij->i", w, dirs)
    vu = dirs @ v
    A = np.dot(v, v) - vu * vu
    B = 2.0 * (w @ v - wu * vu)
    C = np.einsum("ij,ij->i", w, w) - wu * wu
    s = np.where(A > 1e-14, -B / (2.0 * np.maximum(A, 1e-14)), 0.0)
    s = np.clip(s, 0.0, 1.0)
    d2 = np.minimum(A * s * s + B * s + C, np.minimum(C, A + B + C))
    return np.sqrt(np.maximum(d2, 0.0))


def batch_dist_planar_square(dirs, pts, square: PlanarSquare) -> np.ndarray:
    """Line-to-square distance: interior 2x2 solve plus the four edges."""
    origin = square.plane.embed(square.center2d)
    h = square.halfwidth
    u1 = dirs[:, 0]
    u2 = dirs[:, 1]
    w = origin - pts
    wu = np.einsum("ij,ij->i", w, dirs)
    w1 = w[:, 0]
    w2 = w[:, 1]
    # Unconstrained minimizer of |w + s1 e1 + s2 e2|^2 - (wu + s1 u1 + s2 u2)^2:
    # (I - u_par u_par^T) s = wu * u_par - w_par
    m11 = 1.0 - u1 * u1
    m22 = 1.0 - u2 * u2
    m12 = -u1 * u2
    det = m11 * m22 - m12 * m12
    r1 = wu * u1 - w1
    r2 = wu * u2 - w2
    ok = det > 1e-14
    safe = np.maximum(det, 1e-14)
    s1 = (m22 * r1 - m12 * r2) / safe
    s2 = (m11 * r2 - m12 * r1) / safe
    inside = ok & (np.abs(s1) <= h) & (np.abs(s2) <= h)
    d2_in = np.where(
        inside,
        np.einsum("ij,ij->i", w, w)
        + 2.0 * (s1 * w1 + s2 * w2)
        + s1 * s1
        + s2 * s2
        - (wu + s1 * u1 + s2 * u2) ** 2,
        np.inf,
    )
    corners = square.corners()
    d_edges = np.full(dirs.shape[0], np.inf)
    for i in range(4):
        d_edges = np.minimum(
            d_edges, batch_dist_segment(dirs, pts, corners[i], corners[(i + 1) % 4])
        )
    return np.minimum(np.sqrt(np.maximum(d2_in, 0.0)), d_edges)


def batch_dist_region(dirs, pts, region: HitRegion) -> np.ndarray:
    if isinstance(region, SinglePoint):
        return batch_dist_point(dirs, pts, region.p)
    if isinstance(region, Ball):
        return np.maximum(0.0, batch_dist_point(dirs, pts, region.center) - region.radius)
    if isinstance(region, Segment):
        return batch_dist_segment(dirs, pts, region.a, region.b)
    if isinstance(region, PlanarSquare):
        return batch_dist_planar_square(dirs, pts, region)
    if isinstance(region, AxisBox):
        out = np.empty(dirs.shape[0])
        for i in range(dirs.shape[0]):
            out[i] = dist_line_region(canonicalize_line(pts[i], dirs[i]), region)
        return out
    raise TypeError(f"not a hit region: {region!r}")
