"""Poisson cylinder processes: exact line-process sampling, hitting-measure
identities, vacant-set geometry, and batch Monte Carlo experiments."""

from ._kernels import BACKEND as kernel_backend
from .geometry import (
    AxisBox,
    Ball,
    CanonicalLine,
    PlanarSquare,
    PlaneSpec,
    Segment,
    SinglePoint,
    canonicalize_line,
    cylinder_hits,
    dist_line_point,
    dist_line_region,
    trace_on_plane,
)
from .measure import (
    MeasureValue,
    mu_hit_ball_exact,
    mu_hit_mc,
    mu_joint_hit_mc,
    point_pair_covariance,
    unit_ball_volume,
    void_probability_exact,
)
from .sampler import (
    LineProcessSample,
    WindowSpec,
    load_lines,
    restrict_to_subwindow,
    sample_process,
    save_lines,
    thin_process,
)
from .vacancy import (
    CrossingQuery,
    PlanarSliceOccupancy,
    TriangleEventSpec,
    build_slice,
    has_crossing,
    is_point_vacant,
    triangle_event,
    vacant_component_reaches,
)

__version__ = "0.1.0"

__all__ = [
    "AxisBox", "Ball", "CanonicalLine", "PlanarSquare", "PlaneSpec",
    "Segment", "SinglePoint", "canonicalize_line", "cylinder_hits",
    "dist_line_point", "dist_line_region", "trace_on_plane",
    "MeasureValue", "mu_hit_ball_exact", "mu_hit_mc", "mu_joint_hit_mc",
    "point_pair_covariance", "unit_ball_volume", "void_probability_exact",
    "LineProcessSample", "WindowSpec", "load_lines", "restrict_to_subwindow",
    "sample_process", "save_lines", "thin_process",
    "CrossingQuery", "PlanarSliceOccupancy", "TriangleEventSpec",
    "build_slice", "has_crossing", "is_point_vacant", "triangle_event",
    "vacant_component_reaches",
    "kernel_backend", "__version__",
]
