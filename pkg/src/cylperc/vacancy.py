"""Vacant-set and occupied-set queries on sampled line processes.

Planar slices are rasterized with an exact center-point test (a cell is
occupied iff its center lies inside some cylinder); connectivity uses the
site-percolation duality convention: vacant paths are 4-connected, occupied
paths 8-connected (2d- and full-neighbor connectivity in d dimensions).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy import ndimage

from ._kernels import occupy_grid, occupy_slice
from .errors import (
    BudgetExceeded,
    DimensionMismatch,
    ResolutionTooCoarse,
    VacancyUndefined,
    WindowTooSmall,
)
from .geometry import (
    Ball,
    ConicObstacle,
    EmptyTrace,
    PlanarSquare,
    PlaneSpec,
    Segment,
    batch_dist_point,
    batch_dist_segment,
    trace_on_plane,
)
from .sampler import LineProcessSample

GRID_CELL_BUDGET = 10**9


# ---------------------------------------------------------------------------
# Planar regions used by crossing queries


@dataclass(frozen=True)
class Disc2D:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class Square2D:
    """Closed l_inf-ball in plane coordinates."""

    center: np.ndarray
    halfwidth: float


class Boundary2D:
    """The outer cell ring of the analysis square (its topological boundary)."""


Region2D = Union[Disc2D, Square2D, Boundary2D]


@dataclass(frozen=True)
class CrossingQuery:
    kind: str  # "vacant" | "occupied"
    from_region: Region2D
    to_region: Region2D

    def __post_init__(self):
        if self.kind not in ("vacant", "occupied"):
            raise ValueError("kind must be 'vacant' or 'occupied'")


@dataclass
class PlanarSliceOccupancy:
    """Trace of all cylinders on a 2-plane over an analysis square."""

    plane: PlaneSpec
    square: PlanarSquare
    resolution: float
    origin: np.ndarray  # lower-left corner (x0, y0) in plane coordinates
    bitmap: np.ndarray  # uint8 (ny, nx), 1 = occupied
    obstacles: Optional[list[ConicObstacle]] = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.bitmap.shape

    def cell_centers(self):
        ny, nx = self.bitmap.shape
        cx = self.origin[0] + (np.arange(nx) + 0.5) * self.resolution
        cy = self.origin[1] + (np.arange(ny) + 0.5) * self.resolution
        return cx, cy

    def occupancy_fraction(self) -> float:
        return float(self.bitmap.mean())


def _cells_meeting(slice_: PlanarSliceOccupancy, region: Region2D) -> np.ndarray:
    """Mask of grid cells whose closed cell rectangle meets the closed region."""
    ny, nx = slice_.bitmap.shape
    eps = slice_.resolution
    cx, cy = slice_.cell_centers()
    if isinstance(region, Boundary2D):
        mask = np.zeros((ny, nx), dtype=bool)
        mask[0, :] = mask[-1, :] = True
        mask[:, 0] = mask[:, -1] = True
        return mask
    if isinstance(region, Square2D):
        mx = np.abs(cx - region.center[0]) <= region.halfwidth + eps / 2 + 1e-12
        my = np.abs(cy - region.center[1]) <= region.halfwidth + eps / 2 + 1e-12
        return my[:, None] & mx[None, :]
    if isinstance(region, Disc2D):
        dx = np.maximum(np.abs(cx - region.center[0]) - eps / 2, 0.0)
        dy = np.maximum(np.abs(cy - region.center[1]) - eps / 2, 0.0)
        return (dy[:, None] ** 2 + dx[None, :] ** 2) <= region.radius**2 + 1e-12
    raise TypeError(f"not a planar region: {region!r}")


# ---------------------------------------------------------------------------
# Point queries


def is_point_vacant(p, sample: LineProcessSample) -> bool:
    """True iff p lies in no cylinder; defined only inside the window."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape[0] != sample.window.d:
        raise DimensionMismatch("point dimension differs from window dimension")
    if np.linalg.norm(p - sample.window.center) > sample.window.radius + 1e-9:
        raise VacancyUndefined("point outside the resolved window")
    if sample.n_lines == 0:
        return True
    return bool(
        np.all(batch_dist_point(sample.directions, sample.anchors, p) > 1.0)
    )


# ---------------------------------------------------------------------------
# Slices and crossings


def build_slice(
    sample: LineProcessSample,
    plane: PlaneSpec,
    square: PlanarSquare,
    eps: float,
    with_obstacles: bool = True,
) -> PlanarSliceOccupancy:
    """Rasterize the cylinder traces over the square at resolution eps."""
    if eps > 0.5:
        raise ResolutionTooCoarse("cells larger than 0.5 defeat the center test")
    if plane.dim != sample.window.d:
        raise DimensionMismatch("plane dimension differs from sample dimension")
    h = square.halfwidth
    n = max(1, int(np.ceil(2.0 * h / eps - 1e-9)))
    x0 = square.center2d[0] - h
    y0 = square.center2d[1] - h
    bitmap = occupy_slice(
        np.ascontiguousarray(sample.directions),
        np.ascontiguousarray(sample.anchors),
        np.ascontiguousarray(plane.offset),
        float(x0),
        float(y0),
        float(eps),
        n,
        n,
    )
    obstacles = None
    if with_obstacles:
        obstacles = []
        for i in range(sample.n_lines):
            tr = trace_on_plane(_line_view(sample, i), plane)
            if not isinstance(tr, EmptyTrace):
                obstacles.append(tr)
    return PlanarSliceOccupancy(
        plane=plane,
        square=square,
        resolution=eps,
        origin=np.array([x0, y0]),
        bitmap=bitmap,
        obstacles=obstacles,
    )


def _line_view(sample: LineProcessSample, i: int):
    from .geometry import CanonicalLine

    return CanonicalLine(sample.directions[i].copy(), sample.anchors[i].copy())


_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


def has_crossing(slice_: PlanarSliceOccupancy, query: CrossingQuery) -> bool:
    """Reachability between the query regions over cells of the query kind."""
    occupied = slice_.bitmap.astype(bool)
    if query.kind == "occupied":
        cells = occupied
        structure = _STRUCT_8
    else:
        cells = ~occupied
        structure = _STRUCT_4
    src = _cells_meeting(slice_, query.from_region) & cells
    dst = _cells_meeting(slice_, query.to_region) & cells
    if not src.any() or not dst.any():
        return False
    labels, _ = ndimage.label(cells, structure=structure)
    return bool(np.isin(np.unique(labels[src]), np.unique(labels[dst])).any())


# ---------------------------------------------------------------------------
# Triangle-blocking events (exact, no grid)


@dataclass(frozen=True)
class TriangleEventSpec:
    """Three rotated opposing segment pairs around the origin in the plane.

    The base pair sits at x = +-(sqrt(3)/2) a with y in [-a/2, -a/4]; the
    other two pairs are its rotations by 2pi/3 and 4pi/3.
    """

    a: float
    dim: int = 3

    def segment_pairs(self) -> list[tuple[Segment, Segment]]:
        a = self.a
        base = []
        for sx in (-1.0, 1.0):
            p0 = np.zeros(self.dim)
            p1 = np.zeros(self.dim)
            p0[0] = p1[0] = sx * np.sqrt(3.0) / 2.0 * a
            p0[1] = -a / 2.0
            p1[1] = -a / 4.0
            base.append((p0, p1))
        pairs = []
        for rot in range(3):
            ang = 2.0 * np.pi / 3.0 * rot
            c, s = np.cos(ang), np.sin(ang)
            segs = []
            for p0, p1 in base:
                q0, q1 = p0.copy(), p1.copy()
                q0[0], q0[1] = c * p0[0] - s * p0[1], s * p0[0] + c * p0[1]
                q1[0], q1[1] = c * p1[0] - s * p1[1], s * p1[0] + c * p1[1]
                segs.append(Segment(q0, q1))
            pairs.append((segs[0], segs[1]))
        return pairs


def triangle_event(sample: LineProcessSample, spec: TriangleEventSpec) -> bool:
    """True iff, for each of the three pairs, some single sampled line's
    cylinder hits both segments of the pair (exact segment tests)."""
    if spec.dim != sample.window.d:
        raise DimensionMismatch("spec dimension differs from sample dimension")
    pairs = spec.segment_pairs()
    c = sample.window.center
    reach = max(
        float(np.linalg.norm(p - c))
        for sm, sp in pairs
        for p in (sm.a, sm.b, sp.a, sp.b)
    )
    if reach > sample.window.radius + 1e-9:
        raise WindowTooSmall("window does not contain the segment configuration")
    if sample.n_lines == 0:
        return False
    dirs, anchors = sample.directions, sample.anchors
    for sm, sp in pairs:
        hit_minus = batch_dist_segment(dirs, anchors, sm.a, sm.b) <= 1.0
        hit_plus = batch_dist_segment(dirs, anchors, sp.a, sp.b) <= 1.0
        if not np.any(hit_minus & hit_plus):
            return False
    return True


# ---------------------------------------------------------------------------
# Vacant reachability to a sphere shell


def vacant_component_reaches(
    sample: LineProcessSample,
    from_ball: Ball,
    R: float,
    eps: float,
    mode: str = "full",
) -> bool:
    """Grid reachability of vacant cells from `from_ball` to the shell of
    radius R around the window center (4-connectivity in planar mode,
    2d-connectivity in full mode)."""
    d = sample.window.d
    center = sample.window.center
    fc = np.asarray(from_ball.center, dtype=np.float64)
    if np.linalg.norm(fc - center) + from_ball.radius > R:
        raise WindowTooSmall("from-ball not contained in B(center, R)")
    if sample.window.radius + 1e-9 < R:
        raise WindowTooSmall("sample window smaller than the reach radius")

    if mode == "planar":
        off = np.zeros(d)
        off[2:] = center[2:]
        plane = PlaneSpec(d, off)
        square = PlanarSquare(plane, center[:2].copy(), R)
        slice_ = build_slice(sample, plane, square, eps, with_obstacles=False)
        h = float(np.linalg.norm(fc[2:] - center[2:]))
        if h >= from_ball.radius:
            raise WindowTooSmall("from-ball does not meet the slice plane")
        trace_r = float(np.sqrt(from_ball.radius**2 - h * h))
        occ = slice_.bitmap.astype(bool)
        vac = ~occ
        src = _cells_meeting(slice_, Disc2D(fc[:2], trace_r)) & vac
        cx, cy = slice_.cell_centers()
        rad = np.sqrt(
            (cy[:, None] - center[1]) ** 2 + (cx[None, :] - center[0]) ** 2
        )
        half_diag = eps * np.sqrt(2.0) / 2.0
        dst = (np.abs(rad - R) <= half_diag + 1e-12) & vac
        if not src.any() or not dst.any():
            return False
        labels, _ = ndimage.label(vac, structure=_STRUCT_4)
        return bool(np.isin(np.unique(labels[src]), np.unique(labels[dst])).any())

    if mode != "full":
        raise ValueError("mode must be 'planar' or 'full'")
    n = max(1, int(np.ceil(2.0 * R / eps - 1e-9)))
    if d * n**d > GRID_CELL_BUDGET:
        raise BudgetExceeded("cell budget exceeded")
    origin = center - R
    occ = occupy_grid(
        np.ascontiguousarray(sample.directions),
        np.ascontiguousarray(sample.anchors),
        np.ascontiguousarray(origin),
        float(eps),
        (n,) * d,
    ).astype(bool)
    axes = [origin[i] + (np.arange(n) + 0.5) * eps - center[i] for i in range(d)]
    grids = np.meshgrid(*axes, indexing="ij")
    rad = np.sqrt(sum(g * g for g in grids))
    vac = ~occ & (rad <= R + eps * np.sqrt(d) / 2.0)
    dfrom = np.sqrt(
        sum((g + center[i] - fc[i]) ** 2 for i, g in enumerate(grids))
    )
    src = (dfrom <= from_ball.radius + eps * np.sqrt(d) / 2.0) & vac
    dst = (np.abs(rad - R) <= eps * np.sqrt(d) / 2.0 + 1e-12) & vac
    if not src.any() or not dst.any():
        return False
    structure = ndimage.generate_binary_structure(d, 1)
    labels, _ = ndimage.label(vac, structure=structure)
    return bool(np.isin(np.unique(labels[src]), np.unique(labels[dst])).any())


# ---------------------------------------------------------------------------
# PGM export (binary P5, 1 = occupied) with a sidecar text header


def write_pgm(slice_: PlanarSliceOccupancy, path: str, header_fields: dict) -> None:
    ny, nx = slice_.bitmap.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{nx} {ny}\n1\n".encode("ascii"))
        f.write(slice_.bitmap.tobytes())
    with open(path + ".hdr", "w") as f:
        f.write("# cylperc-slice v1\n")
        f.write(f"plane_offset={','.join(f'{x:.17g}' for x in slice_.plane.offset)}\n")
        f.write(
            f"square_center={slice_.square.center2d[0]:.17g},"
            f"{slice_.square.center2d[1]:.17g}\n"
        )
        f.write(f"square_halfwidth={slice_.square.halfwidth:.17g}\n")
        f.write(f"epsilon={slice_.resolution:.17g}\n")
        for k, v in header_fields.items():
            f.write(f"{k}={v}\n")


def read_pgm_header(path: str) -> dict:
    fields = {}
    with open(path + ".hdr") as f:
        first = f.readline()
        if not first.startswith("# cylperc-slice"):
            raise ValueError("not a cylperc slice header")
        for line in f:
            line = line.strip()
            if line and "=" in line:
                k, v = line.split("=", 1)
                fields[k] = v
    return fields
