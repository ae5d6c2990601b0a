"""Invariant line-measure of hitting sets: exact identities and Monte Carlo.

The measure is normalized so that the mass of lines whose cylinder meets
B(x, r) equals the volume of the (d-1)-ball of radius r+1.  Monte Carlo
estimates sample lines hitting an envelope ball (whose mass is exact) and
count the fraction hitting the target; for joint hits of well-separated
regions the direction law is optionally tilted toward the separation axis
(a defensive mixture, so the estimator stays unbiased).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from ._draw import (
    ball_volume,
    draw_envelope_lines,
    offsets_in_disc,
    segment_stadium_offsets,
    uniform_directions,
)
from .errors import ContainmentViolation, OutOfRange, SeparationTooSmall
from .geometry import (
    Ball,
    HitRegion,
    Segment,
    SinglePoint,
    batch_dist_point,
    batch_dist_region,
    bounding_sphere,
)
from .rng import derive_rng


@dataclass(frozen=True)
class MeasureValue:
    value: float
    stderr: float
    method: str  # "exact" | "monte-carlo"

    def __post_init__(self):
        if self.value < 0 or self.stderr < 0:
            raise OutOfRange("measure value and stderr must be >= 0")
        if self.method == "exact" and self.stderr != 0:
            raise OutOfRange("exact values carry stderr 0")


def unit_ball_volume(m: int) -> float:
    """Volume of the unit m-ball."""
    if not 1 <= m <= 8:
        raise OutOfRange("ball dimension must be in [1, 8]")
    return ball_volume(m)


def mu_hit_ball_exact(d: int, center, radius: float) -> MeasureValue:
    """Mass of lines whose cylinder meets B(center, radius):
    kappa_{d-1} (radius+1)^{d-1}, independent of the center."""
    if radius < 0:
        raise OutOfRange("radius must be >= 0")
    np.asarray(center, dtype=np.float64)  # validates shape/finiteness lazily
    return MeasureValue(
        unit_ball_volume(d - 1) * (radius + 1.0) ** (d - 1), 0.0, "exact"
    )


def void_probability_exact(d: int, u: float, r: float) -> float:
    """P[B(0,r) entirely vacant] = exp(-u * kappa_{d-1} (r+1)^{d-1})."""
    if u < 0:
        raise OutOfRange("intensity must be >= 0")
    return float(np.exp(-u * mu_hit_ball_exact(d, np.zeros(d), r).value))


# ---------------------------------------------------------------------------
# Direction-cap importance sampling


@dataclass(frozen=True)
class DirectionCap:
    """Double spherical cap of half-angle phi0 around +-axis, mixed 50/50
    with the uniform law; weights keep the estimator unbiased."""

    axis: np.ndarray
    cos_phi0: float
    cap_fraction: float  # uniform-measure fraction of ONE cap

    def weights(self, dirs: np.ndarray) -> np.ndarray:
        in_cap = np.abs(dirs @ self.axis) >= self.cos_phi0
        dens = 0.5 + np.where(in_cap, 0.5 / (2.0 * self.cap_fraction), 0.0)
        return 1.0 / dens


def cap_fraction(d: int, phi0: float) -> float:
    """Uniform-sphere measure of a cap of half-angle phi0 (phi0 <= pi/2)."""
    s2 = np.sin(phi0) ** 2
    return float(0.5 * betainc((d - 1) / 2.0, 0.5, s2))


def make_direction_cap(d: int, axis: np.ndarray, phi0: float) -> DirectionCap:
    phi0 = min(phi0, np.pi / 2)
    return DirectionCap(axis, float(np.cos(phi0)), cap_fraction(d, phi0))


def _sample_cap_costheta(d: int, cos_phi0: float, n: int, rng) -> np.ndarray:
    """cos(theta) with density ~ (1-z^2)^{(d-3)/2} on [cos_phi0, 1]."""
    if d == 2:
        phi0 = np.arccos(cos_phi0)
        return np.cos(rng.random(n) * phi0)
    if d == 3:
        return cos_phi0 + (1.0 - cos_phi0) * rng.random(n)
    out = np.empty(n)
    filled = 0
    sin2_phi0 = 1.0 - cos_phi0 * cos_phi0
    while filled < n:
        m = max(2 * (n - filled), 64)
        z = cos_phi0 + (1.0 - cos_phi0) * rng.random(m)
        accept = rng.random(m) < ((1.0 - z * z) / sin2_phi0) ** ((d - 3) / 2.0)
        z = z[accept][: n - filled]
        out[filled : filled + z.shape[0]] = z
        filled += z.shape[0]
    return out


def _draw_cap_directions(d: int, cap: DirectionCap, n: int, rng) -> np.ndarray:
    z = _sample_cap_costheta(d, cap.cos_phi0, n, rng)
    g = rng.standard_normal((n, d))
    g -= np.outer(g @ cap.axis, cap.axis)
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    dirs = (sign * z)[:, None] * cap.axis + np.sqrt(1.0 - z * z)[:, None] * g
    return dirs


def _draw_lines(d, center, rho, n, rng, cap: DirectionCap | None):
    if cap is None:
        dirs, pts = draw_envelope_lines(d, center, rho, n, rng)
        return dirs, pts, np.ones(n)
    use_cap = rng.random(n) < 0.5
    dirs = uniform_directions(d, n, rng)
    n_cap = int(use_cap.sum())
    if n_cap:
        dirs[use_cap] = _draw_cap_directions(d, cap, n_cap, rng)
    pts = offsets_in_disc(dirs, rho, rng) + np.asarray(center, dtype=np.float64)
    return dirs, pts, cap.weights(dirs)


def _auto_cap(d: int, a: HitRegion, b: HitRegion) -> DirectionCap | None:
    ca, ra = bounding_sphere(a)
    cb, rb = bounding_sphere(b)
    sep = float(np.linalg.norm(cb - ca))
    reach = ra + rb + 2.0
    if sep <= 2.0 * reach:
        return None
    axis = (cb - ca) / sep
    # A line hitting B(ca, ra+1) and B(cb, rb+1) has |sin(angle to axis)|
    # <= reach/sep exactly, so this cap covers every joint-hit direction.
    phi0 = np.arcsin(min(1.0, reach / sep))
    return make_direction_cap(d, axis, phi0)


# ---------------------------------------------------------------------------
# Monte Carlo estimators


def _check_containment(target: HitRegion, envelope: Ball) -> None:
    c, r = bounding_sphere(target)
    gap = float(np.linalg.norm(c - envelope.center))
    if gap + r > envelope.radius + 1e-9:
        raise ContainmentViolation(
            "target region not contained in the sampling envelope ball"
        )


def mu_hit_mc(
    d: int,
    target: HitRegion,
    envelope: Ball,
    n_lines: int,
    seed: int,
    experiment_id: str = "mu-hit",
    replicate_index: int = 0,
) -> MeasureValue:
    """Unbiased estimate of the hitting mass of `target` via lines sampled
    from the exactly-normalized envelope hitting set."""
    _check_containment(target, envelope)
    rng = derive_rng(seed, experiment_id, replicate_index)
    rho = envelope.radius + 1.0
    dirs, pts = draw_envelope_lines(d, envelope.center, rho, n_lines, rng)
    hit = batch_dist_region(dirs, pts, target) <= 1.0
    d_env = batch_dist_point(dirs, pts, envelope.center)
    if np.any(hit & (d_env > rho + 1e-9)):
        raise ContainmentViolation("sampled line hits target but not envelope")
    scale = mu_hit_ball_exact(d, envelope.center, envelope.radius).value
    p = float(hit.mean())
    stderr = scale * float(np.sqrt(p * (1.0 - p) / n_lines))
    return MeasureValue(scale * p, stderr, "monte-carlo")


def mu_hit_mc_shared(
    d: int,
    targets: list[HitRegion],
    envelope: Ball,
    n_lines: int,
    seed: int,
    experiment_id: str = "mu-hit-shared",
) -> list[MeasureValue]:
    """Estimates for several targets on ONE shared line sample (pathwise
    comparable: nested targets give ordered estimates)."""
    for t in targets:
        _check_containment(t, envelope)
    rng = derive_rng(seed, experiment_id, 0)
    rho = envelope.radius + 1.0
    dirs, pts = draw_envelope_lines(d, envelope.center, rho, n_lines, rng)
    scale = mu_hit_ball_exact(d, envelope.center, envelope.radius).value
    out = []
    for t in targets:
        p = float((batch_dist_region(dirs, pts, t) <= 1.0).mean())
        out.append(
            MeasureValue(
                scale * p, scale * float(np.sqrt(p * (1 - p) / n_lines)), "monte-carlo"
            )
        )
    return out


def _joint_hit_values(d, a, b, envelope, n, rng, cap) -> np.ndarray:
    """Per-line unbiased contributions to mu(L_a ∩ L_b)."""
    if isinstance(a, Segment):
        # Sample lines hitting the segment's cylinder exactly; the
        # direction-conditional stadium volume replaces the ball normalizer,
        # which would dwarf the joint mass for long segments.
        if cap is None:
            dirs = uniform_directions(d, n, rng)
            w = np.ones(n)
        else:
            use_cap = rng.random(n) < 0.5
            dirs = uniform_directions(d, n, rng)
            n_cap = int(use_cap.sum())
            if n_cap:
                dirs[use_cap] = _draw_cap_directions(d, cap, n_cap, rng)
            w = cap.weights(dirs)
        pts, mass = segment_stadium_offsets(dirs, a.a, a.b, rng)
        hit = batch_dist_region(dirs, pts, b) <= 1.0
        return mass * w * hit
    rho = envelope.radius + 1.0
    dirs, pts, w = _draw_lines(d, envelope.center, rho, n, rng, cap)
    hit = (batch_dist_region(dirs, pts, a) <= 1.0) & (
        batch_dist_region(dirs, pts, b) <= 1.0
    )
    scale = mu_hit_ball_exact(d, envelope.center, envelope.radius).value
    return scale * w * hit


def mu_joint_hit_mc(
    d: int,
    a: HitRegion,
    b: HitRegion,
    envelope: Ball,
    n_lines: int,
    seed: int,
    importance: str = "auto",
    experiment_id: str = "mu-joint",
    replicate_index: int = 0,
) -> MeasureValue:
    """Unbiased estimate of the mass of lines whose cylinders hit both
    regions.  The envelope must contain region `a` (unless `a` is a segment,
    whose hitting set is sampled exactly); region `b` may lie far outside it
    (joint hits force the line into L_a)."""
    if not isinstance(a, Segment):
        _check_containment(a, envelope)
    cap = _auto_cap(d, a, b) if importance == "auto" else None
    rng = derive_rng(seed, experiment_id, replicate_index)
    vals = _joint_hit_values(d, a, b, envelope, n_lines, rng, cap)
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(n_lines)) if n_lines > 1 else 0.0
    return MeasureValue(mean, stderr, "monte-carlo")


def joint_hit_replicates(
    d: int,
    a: HitRegion,
    b: HitRegion,
    envelope: Ball,
    n_lines: int,
    n_batches: int,
    seed: int,
    importance: str = "auto",
    experiment_id: str = "mu-joint",
) -> np.ndarray:
    """Per-batch unbiased estimates (n_batches independent substreams) for
    replicate-based stderr and jackknife slope fits."""
    if not isinstance(a, Segment):
        _check_containment(a, envelope)
    cap = _auto_cap(d, a, b) if importance == "auto" else None
    per = max(1, n_lines // n_batches)
    out = np.empty(n_batches)
    for i in range(n_batches):
        rng = derive_rng(seed, experiment_id, i)
        out[i] = _joint_hit_values(d, a, b, envelope, per, rng, cap).mean()
    return out


def point_pair_covariance(
    d: int,
    u: float,
    separation: float,
    n_lines: int,
    seed: int,
    experiment_id: str = "cov-pair",
) -> tuple[float, float]:
    """Covariance of the vacancy indicators of two points at the given
    separation, via the Poisson identity
    cov = exp(-2 u kappa_{d-1}) (exp(u m) - 1) with m the joint hitting
    mass of the two points; stderr by the delta method."""
    m, se = point_pair_joint_mass(d, separation, n_lines, seed, experiment_id)
    kappa = unit_ball_volume(d - 1)
    base = float(np.exp(-2.0 * u * kappa))
    cov = base * float(np.expm1(u * m))
    cov_se = base * u * float(np.exp(u * m)) * se
    return cov, cov_se


def point_pair_joint_mass(
    d: int,
    separation: float,
    n_lines: int,
    seed: int,
    experiment_id: str = "cov-pair",
) -> tuple[float, float]:
    """Joint hitting mass m = mu(L_x ∩ L_y) for |x-y| = separation > 2."""
    if separation <= 2.0:
        raise SeparationTooSmall("separation must exceed 2")
    x = np.zeros(d)
    y = np.zeros(d)
    y[0] = separation
    env = Ball(x, 0.0)
    mv = mu_joint_hit_mc(
        d, SinglePoint(x), SinglePoint(y), env, n_lines, seed,
        experiment_id=experiment_id,
    )
    return mv.value, mv.stderr
