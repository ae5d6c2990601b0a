"""Batch Monte Carlo experiments: scaling fits, crossing probabilities, and
contrast tables, with full seed provenance.

Every experiment derives all randomness from (experiment id, master seed,
replicate index), so a report regenerates bit-identically.  Slope fits are
ordinary least squares on log-log points with jackknife-over-replicates
standard errors; crossing probabilities use the adjusted log
log((k + 1/2) / (n + 1)) so zero counts stay finite.
"""

from __future__ import annotations

import io
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import HypothesisViolated, InvariantViolation, SeparationTooSmall
from .geometry import Ball, PlanarSquare, PlaneSpec, Segment, SinglePoint
from .measure import joint_hit_replicates, unit_ball_volume
from .rng import derive_rng
from .sampler import WindowSpec, sample_process, subset_by_mask
from .vacancy import (
    Boundary2D,
    CrossingQuery,
    Square2D,
    TriangleEventSpec,
    build_slice,
    has_crossing,
    triangle_event,
    vacant_component_reaches,
)

C5 = 3.8 / 3.0

CSV_HEADER = "# cylperc-report v1"
CSV_COLUMNS = "kind,id,d,u,scale,epsilon,replicates,estimate,stderr,seed"


# ---------------------------------------------------------------------------
# Report plumbing


@dataclass
class ReportRow:
    kind: str  # "estimate" | "fit"
    id: str
    d: Optional[int]
    u: Optional[float]
    scale: Optional[float]
    epsilon: Optional[float]
    replicates: Optional[int]
    estimate: float
    stderr: float
    seed: int


@dataclass
class EstimateReport:
    experiment_id: str
    params: dict
    rows: list[ReportRow]
    master_seed: int
    wall_seconds: float = 0.0

    def estimates(self) -> list[ReportRow]:
        return [r for r in self.rows if r.kind == "estimate"]

    def fits(self) -> dict[str, ReportRow]:
        return {r.id: r for r in self.rows if r.kind == "fit"}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        buf.write(CSV_COLUMNS + "\n")

        def fmt(x):
            if x is None:
                return ""
            if isinstance(x, float):
                return f"{x:.10g}"
            return str(x)

        for r in self.rows:
            buf.write(
                ",".join(
                    fmt(v)
                    for v in (
                        r.kind, r.id, r.d, r.u, r.scale, r.epsilon,
                        r.replicates, r.estimate, r.stderr, r.seed,
                    )
                )
                + "\n"
            )
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"experiment {self.experiment_id}  seed={self.master_seed}"]
        for k, v in sorted(self.params.items()):
            lines.append(f"  {k} = {v}")
        for r in self.rows:
            tag = f"scale={r.scale:g}" if r.scale is not None else r.id
            lines.append(
                f"  [{r.kind}] {tag}: {r.estimate:.6g} +- {r.stderr:.3g}"
            )
        lines.append(f"  wall_seconds = {self.wall_seconds:.2f}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ScaleSchedule:
    """Scale ladders a_0 < a_1 < ... under a power or geometric growth rule.

    Rules: "power32" grows the exponent by 3/2 per level (a_n = a_0^{(3/2)^n}),
    "power5" uses the 3.8/3 exponent rule, "geometric" multiplies by `ratio`.
    """

    a0: float
    growth: str  # "power32" | "power5" | "geometric"
    n_max: int
    ratio: float = 3.0

    def scales(self) -> list[float]:
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.growth == "power32":
            out = [self.a0 ** (1.5**n) for n in range(self.n_max)]
        elif self.growth == "power5":
            out = [self.a0 ** (C5**n) for n in range(self.n_max)]
        elif self.growth == "geometric":
            out = [self.a0 * self.ratio**n for n in range(self.n_max)]
        else:
            raise ValueError(f"unknown growth rule: {self.growth}")
        if any(b <= a for a, b in zip(out, out[1:])):
            raise ValueError("schedule not strictly increasing")
        return out


# ---------------------------------------------------------------------------
# Fitting helpers


def ols_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Least-squares slope and intercept of y on x."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    slope = float(np.dot(x - xm, y - ym) / np.dot(x - xm, x - xm))
    return slope, float(ym - slope * xm)


def adjusted_log_prob(k: np.ndarray, n) -> np.ndarray:
    """log((k + 1/2)/(n + 1)); finite at k = 0 and k = n."""
    return np.log((np.asarray(k, dtype=np.float64) + 0.5) / (np.asarray(n) + 1.0))


def jackknife_slope(
    logx: np.ndarray,
    reps: np.ndarray,
    stat: Callable[[np.ndarray], np.ndarray],
) -> tuple[float, float]:
    """Slope of stat(reps) on logx with leave-one-replicate-out stderr.

    reps has shape (n_scales, n_reps); stat maps it to one log-value per
    scale (e.g. log of row means, or adjusted log of row counts).
    """
    m = reps.shape[1]
    slope, _ = ols_slope(logx, stat(reps))
    if m < 2:
        return slope, 0.0
    loo = np.empty(m)
    idx = np.arange(m)
    for j in range(m):
        sub = reps[:, idx != j]
        loo[j], _ = ols_slope(logx, stat(sub))
    stderr = float(np.sqrt((m - 1) / m * np.sum((loo - loo.mean()) ** 2)))
    return slope, stderr


def _log_means(reps: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(reps.mean(axis=1), 1e-300))


def _adjusted_log_counts(reps: np.ndarray) -> np.ndarray:
    return adjusted_log_prob(reps.sum(axis=1), reps.shape[1])


def _estimate_rows(experiment_id, d, u, scales, reps, eps, seed, binary=False):
    """One estimate row per scale from a (n_scales, n_reps) replicate array."""
    rows = []
    m = reps.shape[1]
    for a, row in zip(scales, reps):
        est = float(row.mean())
        if binary:
            se = float(np.sqrt(est * (1.0 - est) / m))
        else:
            se = float(row.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
        rows.append(
            ReportRow("estimate", experiment_id, d, u, float(a), eps, m, est, se, seed)
        )
    return rows


# ---------------------------------------------------------------------------
# Measure-scaling experiments


def exp_mu_scaling(
    d: int,
    r: float,
    alphas: Sequence[float],
    n_lines: int,
    seed: int,
    n_batches: int = 40,
) -> EstimateReport:
    """Joint hitting mass of two balls of radius r at center distance alpha,
    fitted against alpha on log-log axes."""
    t0 = time.perf_counter()
    for a in alphas:
        if a < 2.0 * (r + 1.0):
            raise HypothesisViolated("alpha must be >= 2(r+1)")
    alphas = sorted(float(a) for a in alphas)
    reps = np.empty((len(alphas), n_batches))
    rows = []
    for i, alpha in enumerate(alphas):
        b1 = Ball(np.zeros(d), r)
        c2 = np.zeros(d)
        c2[0] = alpha
        b2 = Ball(c2, r)
        reps[i] = joint_hit_replicates(
            d, b1, b2, b1, n_lines, n_batches, seed,
            experiment_id=f"mu-scaling:{alpha:g}",
        )
    rows += _estimate_rows("mu-scaling", d, None, alphas, reps, None, seed)
    slope, se = jackknife_slope(np.log(alphas), reps, _log_means)
    rows.append(
        ReportRow("fit", "mu-scaling:slope", d, None, None, None, n_batches,
                  slope, se, seed)
    )
    return EstimateReport(
        "mu-scaling",
        {"d": d, "r": r, "alphas": list(alphas), "n_lines": n_lines},
        rows, seed, time.perf_counter() - t0,
    )


def _planar_square_pair(d: int, s: float, r: float):
    """Two coplanar axis squares of side s whose set distance along e1 is r."""
    plane = PlaneSpec(d, np.zeros(d))
    c1 = PlanarSquare(plane, np.zeros(2), s / 2.0)
    c2 = PlanarSquare(plane, np.array([r + s, 0.0]), s / 2.0)
    return c1, c2


def exp_square_scaling(
    d: int,
    s: float,
    rs: Sequence[float],
    n_lines: int,
    seed: int,
    n_batches: int = 40,
) -> EstimateReport:
    """Joint hitting mass of two coplanar squares of side s at distance r,
    fitted against r; also reports the factor gained by doubling s."""
    t0 = time.perf_counter()
    if s < 1.0:
        raise HypothesisViolated("side length must be >= 1")
    for r in rs:
        if r < 4.0:
            raise HypothesisViolated("square distance must be >= 4")
    rs = sorted(float(r) for r in rs)
    reps = np.empty((len(rs), n_batches))
    for i, r in enumerate(rs):
        c1, c2 = _planar_square_pair(d, s, r)
        env = Ball(np.zeros(d), s * np.sqrt(2.0) / 2.0)
        reps[i] = joint_hit_replicates(
            d, c1, c2, env, n_lines, n_batches, seed,
            experiment_id=f"square-scaling:{r:g}",
        )
    rows = _estimate_rows("square-scaling", d, None, rs, reps, None, seed)
    slope, se = jackknife_slope(np.log(rs), reps, _log_means)
    rows.append(
        ReportRow("fit", "square-scaling:slope", d, None, None, None, n_batches,
                  slope, se, seed)
    )
    # s-doubling factor: same center separation D for both side lengths so
    # only the s^2 area factor moves; D = 12 s keeps the squares well apart.
    D = 12.0 * s
    n_dbl = 20 * n_lines
    vals = {}
    for side in (s, 2.0 * s):
        plane = PlaneSpec(d, np.zeros(d))
        c1 = PlanarSquare(plane, np.zeros(2), side / 2.0)
        c2 = PlanarSquare(plane, np.array([D, 0.0]), side / 2.0)
        env = Ball(np.zeros(d), side * np.sqrt(2.0) / 2.0)
        vals[side] = joint_hit_replicates(
            d, c1, c2, env, n_dbl, n_batches, seed,
            experiment_id=f"square-scaling:double:{side:g}",
        )
    base = vals[s].mean()
    big = vals[2.0 * s].mean()
    factor = float(big / base) if base > 0 else float("nan")
    if base > 0 and big > 0:
        fse = factor * float(
            np.sqrt(
                vals[s].var(ddof=1) / base**2
                + vals[2.0 * s].var(ddof=1) / big**2
            )
            / np.sqrt(n_batches)
        )
    else:
        fse = float("nan")
    rows.append(
        ReportRow("fit", "square-scaling:s-doubling", d, None, D, None,
                  n_batches, factor, fse, seed)
    )
    return EstimateReport(
        "square-scaling",
        {"d": d, "s": s, "rs": list(rs), "n_lines": n_lines},
        rows, seed, time.perf_counter() - t0,
    )


def exp_covariance_decay(
    d: int,
    u: float,
    separations: Sequence[float],
    n_lines: int,
    seed: int,
    n_batches: int = 40,
) -> EstimateReport:
    """Covariance of vacancy indicators of two points against their
    separation, via the joint hitting mass identity."""
    t0 = time.perf_counter()
    for sep in separations:
        if sep <= 2.0:
            raise SeparationTooSmall("separations must exceed 2")
    seps = sorted(float(x) for x in separations)
    kappa = unit_ball_volume(d - 1)
    base = float(np.exp(-2.0 * u * kappa))
    covs = np.empty((len(seps), n_batches))
    for i, sep in enumerate(seps):
        x = np.zeros(d)
        y = np.zeros(d)
        y[0] = sep
        m_reps = joint_hit_replicates(
            d, SinglePoint(x), SinglePoint(y), Ball(x, 0.0),
            n_lines, n_batches, seed,
            experiment_id=f"cov-decay:{sep:g}",
        )
        covs[i] = base * np.expm1(u * m_reps)
    rows = _estimate_rows("cov-decay", d, u, seps, covs, None, seed)
    slope, se = jackknife_slope(np.log(seps), covs, _log_means)
    rows.append(
        ReportRow("fit", "cov-decay:slope", d, u, None, None, n_batches,
                  slope, se, seed)
    )
    return EstimateReport(
        "cov-decay",
        {"d": d, "u": u, "separations": list(seps), "n_lines": n_lines},
        rows, seed, time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Crossing experiments


def _crossing_indicator(
    d: int, u: float, a: float, eps: float, kind: str, seed: int,
    experiment_id: str, rep: int,
) -> float:
    """One replicate of the planar crossing event S(0,a/10) -> boundary of
    S(0,a) in the coordinate plane through the origin."""
    window = WindowSpec(d, np.zeros(d), a * np.sqrt(2.0))
    sample = sample_process(window, u, seed, rep, experiment_id=experiment_id)
    plane = PlaneSpec(d, np.zeros(d))
    square = PlanarSquare(plane, np.zeros(2), a)
    slc = build_slice(sample, plane, square, eps, with_obstacles=False)
    q = CrossingQuery(kind, Square2D(np.zeros(2), a / 10.0), Boundary2D())
    return 1.0 if has_crossing(slc, q) else 0.0


def exp_occupied_crossing(
    d: int,
    u: float,
    schedule: ScaleSchedule,
    eps: float,
    replicates: int,
    seed: int,
) -> EstimateReport:
    """Occupied-crossing probability over a scale ladder, with the log-log
    trend slope and the one-constant recursion residual."""
    t0 = time.perf_counter()
    scales = schedule.scales()
    reps = np.empty((len(scales), replicates))
    for i, a in enumerate(scales):
        for rep in range(replicates):
            reps[i, rep] = _crossing_indicator(
                d, u, a, eps, "occupied", seed,
                f"occupied-crossing:{a:g}", rep,
            )
    rows = _estimate_rows(
        "occupied-crossing", d, u, scales, reps, eps, seed, binary=True
    )
    slope, se = jackknife_slope(np.log(scales), reps, _adjusted_log_counts)
    rows.append(
        ReportRow("fit", "occupied-crossing:slope", d, u, None, eps,
                  replicates, slope, se, seed)
    )
    # Recursion residual with one fitted constant:
    # p_n ~ C (a_n/a_{n-1})^2 (p_{n-1}^2 + u a_{n-1}^{2 - c5 (d-1)}).
    p = reps.mean(axis=1)
    if len(scales) >= 2:
        xs = np.array(
            [
                (scales[n] / scales[n - 1]) ** 2
                * (p[n - 1] ** 2 + u * scales[n - 1] ** (2.0 - C5 * (d - 1)))
                for n in range(1, len(scales))
            ]
        )
        ys = p[1:]
        denom = float(np.dot(xs, xs))
        C = float(np.dot(xs, ys) / denom) if denom > 0 else 0.0
        rows.append(
            ReportRow("fit", "occupied-crossing:recursion-C", d, u, None, eps,
                      replicates, C, 0.0, seed)
        )
        for n in range(1, len(scales)):
            rows.append(
                ReportRow(
                    "fit", "occupied-crossing:residual", d, u,
                    float(scales[n]), eps, replicates,
                    float(ys[n - 1] - C * xs[n - 1]), 0.0, seed,
                )
            )
    return EstimateReport(
        "occupied-crossing",
        {"d": d, "u": u, "scales": scales, "eps": eps, "replicates": replicates},
        rows, seed, time.perf_counter() - t0,
    )


def exp_d2_sanity(
    u: float,
    scales: Sequence[float],
    eps: float,
    replicates: int,
    seed: int,
) -> EstimateReport:
    """Vacant-crossing probability in the plane (d = 2) over scales; expected
    to decay strictly for every u > 0."""
    t0 = time.perf_counter()
    scales = sorted(float(a) for a in scales)
    reps = np.empty((len(scales), replicates))
    for i, a in enumerate(scales):
        for rep in range(replicates):
            reps[i, rep] = _crossing_indicator(
                2, u, a, eps, "vacant", seed, f"d2-sanity:{a:g}", rep
            )
    rows = _estimate_rows("d2-sanity", 2, u, scales, reps, eps, seed, binary=True)
    slope, se = jackknife_slope(np.log(scales), reps, _adjusted_log_counts)
    rows.append(
        ReportRow("fit", "d2-sanity:slope", 2, u, None, eps, replicates,
                  slope, se, seed)
    )
    return EstimateReport(
        "d2-sanity",
        {"u": u, "scales": scales, "eps": eps, "replicates": replicates},
        rows, seed, time.perf_counter() - t0,
    )


def exp_vacant_reach(
    d: int,
    u_list: Sequence[float],
    R: float,
    eps: float,
    replicates: int,
    seed: int,
) -> EstimateReport:
    """P[B(0,1/4) vacant-connected to the shell of radius R] per intensity,
    with exact thinning coupling across the u-list (each replicate is
    pathwise monotone; a violation is an implementation bug)."""
    t0 = time.perf_counter()
    us = sorted(float(u) for u in u_list)
    u_max = us[-1]
    window = WindowSpec(d, np.zeros(d), R)
    reach = np.empty((len(us), replicates))
    for rep in range(replicates):
        sample = sample_process(
            window, u_max, seed, rep, experiment_id="vacant-reach"
        )
        mark_rng = derive_rng(seed, "vacant-reach:marks", rep)
        marks = mark_rng.random(sample.n_lines) * u_max if u_max > 0 else np.zeros(0)
        prev = None
        for i, u in enumerate(us):
            sub = subset_by_mask(sample, marks <= u, u)
            ok = vacant_component_reaches(
                sub, Ball(np.zeros(d), 0.25), R, eps, mode="full"
            )
            reach[i, rep] = 1.0 if ok else 0.0
            if prev is not None and reach[i, rep] > prev:
                raise InvariantViolation(
                    "vacant reach increased along a thinning chain"
                )
            prev = reach[i, rep]
    rows = [
        ReportRow("estimate", "vacant-reach", d, float(u), R, eps, replicates,
                  float(reach[i].mean()),
                  float(np.sqrt(reach[i].mean() * (1 - reach[i].mean()) / replicates)),
                  seed)
        for i, u in enumerate(us)
    ]
    return EstimateReport(
        "vacant-reach",
        {"d": d, "u_list": us, "R": R, "eps": eps, "replicates": replicates},
        rows, seed, time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# Triangle contrast


def triangle_base_pair(d: int, a: float) -> tuple[Segment, Segment]:
    spec = TriangleEventSpec(a, dim=d)
    return spec.segment_pairs()[0]


def exp_triangle_contrast(
    d: int,
    u: float,
    a_list: Sequence[float],
    replicates: int,
    seed: int,
    n_m1_lines: int = 2_000_000,
    n_batches: int = 40,
) -> EstimateReport:
    """Probability of the three-pair blocking event per scale, with the
    joint hitting mass of the base segment pair as the mechanism readout.

    With replicates = 0 the event simulation is skipped and only the segment
    masses are reported (the event needs the full window population, which
    grows like u a^{d-1} lines per replicate)."""
    t0 = time.perf_counter()
    if d not in (3, 4):
        raise HypothesisViolated("triangle contrast is defined for d in {3,4}")
    a_list = sorted(float(a) for a in a_list)
    for a in a_list:
        if a < 9.0:
            raise HypothesisViolated("scale must be >= 9")
    hits = np.empty((len(a_list), replicates))
    m1 = np.empty((len(a_list), n_batches))
    rows = []
    for i, a in enumerate(a_list):
        spec = TriangleEventSpec(a, dim=d)
        window = WindowSpec(d, np.zeros(d), a)
        for rep in range(replicates):
            sample = sample_process(
                window, u, seed, rep, experiment_id=f"triangle:{a:g}"
            )
            hits[i, rep] = 1.0 if triangle_event(sample, spec) else 0.0
        sm, sp = spec.segment_pairs()[0]
        m1[i] = joint_hit_replicates(
            d, sm, sp, None, n_m1_lines, n_batches, seed,
            experiment_id=f"triangle:m1:{a:g}",
        )
    if replicates > 0:
        rows += _estimate_rows(
            "triangle", d, u, a_list, hits, None, seed, binary=True
        )
    for a, row in zip(a_list, m1):
        rows.append(
            ReportRow("estimate", "triangle:m1", d, u, float(a), None, n_batches,
                      float(row.mean()),
                      float(row.std(ddof=1) / np.sqrt(n_batches)), seed)
        )
    if replicates > 0 and len(a_list) >= 2:
        slope, se = jackknife_slope(np.log(a_list), hits, _adjusted_log_counts)
        rows.append(
            ReportRow("fit", "triangle:slope", d, u, None, None, replicates,
                      slope, se, seed)
        )
    if len(a_list) >= 2:
        m1_slope, m1_se = jackknife_slope(np.log(a_list), m1, _log_means)
        rows.append(
            ReportRow("fit", "triangle:m1-slope", d, u, None, None, n_batches,
                      m1_slope, m1_se, seed)
        )
    lo, hi = m1[0].mean(), m1[-1].mean()
    ratio = float(hi / lo) if lo > 0 else float("nan")
    rows.append(
        ReportRow("fit", "triangle:m1-ratio", d, u, None, None, n_batches,
                  ratio, 0.0, seed)
    )
    return EstimateReport(
        "triangle",
        {"d": d, "u": u, "a_list": a_list, "replicates": replicates,
         "n_m1_lines": n_m1_lines},
        rows, seed, time.perf_counter() - t0,
    )
