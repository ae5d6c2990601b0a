"""Measure identities and Monte Carlo estimator properties."""

import numpy as np
import pytest

from cylperc.errors import ContainmentViolation, OutOfRange, SeparationTooSmall
from cylperc.geometry import Ball, PlanarSquare, PlaneSpec, Segment, SinglePoint
from cylperc.measure import (
    MeasureValue,
    cap_fraction,
    make_direction_cap,
    joint_hit_replicates,
    mu_hit_ball_exact,
    mu_hit_mc,
    mu_hit_mc_shared,
    mu_joint_hit_mc,
    point_pair_covariance,
    point_pair_joint_mass,
    unit_ball_volume,
    void_probability_exact,
)


def test_unit_ball_volumes_exact():
    assert abs(unit_ball_volume(1) - 2.0) < 1e-15
    assert abs(unit_ball_volume(2) - np.pi) < 1e-15
    assert abs(unit_ball_volume(3) - 4.0 * np.pi / 3.0) < 1e-15
    assert abs(unit_ball_volume(4) - np.pi**2 / 2.0) < 1e-15
    with pytest.raises(OutOfRange):
        unit_ball_volume(0)
    with pytest.raises(OutOfRange):
        unit_ball_volume(9)


def test_hit_mass_of_point_is_kappa():
    # Mass of lines within distance 1 of a point: volume of the unit
    # (d-1)-ball, independently of where the point sits.
    for d in range(2, 9):
        mv = mu_hit_ball_exact(d, np.ones(d) * 3.0, 0.0)
        assert mv.method == "exact" and mv.stderr == 0.0
        assert abs(mv.value - unit_ball_volume(d - 1)) < 1e-14


def test_hit_mass_ball_examples():
    # d=3, r=1: pi * 4 = 4pi.
    assert abs(mu_hit_ball_exact(3, np.zeros(3), 1.0).value - 4 * np.pi) < 1e-12
    # d=4, r=2: kappa_3 * 27 = 36 pi.
    assert abs(mu_hit_ball_exact(4, np.zeros(4), 2.0).value - 36 * np.pi) < 1e-12
    with pytest.raises(OutOfRange):
        mu_hit_ball_exact(3, np.zeros(3), -0.5)


def test_void_probability_formula():
    for d, u, r in [(3, 0.4, 0.0), (4, 0.1, 2.0), (2, 1.0, 1.0)]:
        want = np.exp(-u * unit_ball_volume(d - 1) * (r + 1.0) ** (d - 1))
        assert abs(void_probability_exact(d, u, r) - want) < 1e-15
    assert void_probability_exact(3, 0.0, 5.0) == 1.0
    with pytest.raises(OutOfRange):
        void_probability_exact(3, -0.1, 1.0)


def test_measure_value_validation():
    with pytest.raises(OutOfRange):
        MeasureValue(-1.0, 0.0, "exact")
    with pytest.raises(OutOfRange):
        MeasureValue(1.0, 0.5, "exact")
    MeasureValue(1.0, 0.5, "monte-carlo")


def test_mc_recovers_exact_ball_mass():
    # The envelope normalizer is exact, so a ball equal to its own envelope
    # must give exactly the closed form with zero variance.
    mv = mu_hit_mc(3, Ball(np.zeros(3), 1.0), Ball(np.zeros(3), 1.0), 2000, 5)
    assert abs(mv.value - 4 * np.pi) < 1e-12
    assert mv.stderr == 0.0


@pytest.mark.parametrize("d", [2, 3, 4])
def test_mc_unbiased_inner_ball(d):
    # Estimate the mass of an off-center inner ball over many seeds; the
    # pooled z-score must be small.
    target = Ball(np.full(d, 0.7), 1.3)
    envelope = Ball(np.zeros(d), 4.0)
    exact = mu_hit_ball_exact(d, target.center, target.radius).value
    vals, ses = [], []
    for seed in range(30):
        mv = mu_hit_mc(d, target, envelope, 40_000, seed)
        vals.append(mv.value)
        ses.append(mv.stderr)
    pooled = np.mean(vals)
    pooled_se = np.sqrt(np.sum(np.square(ses))) / len(ses)
    assert abs(pooled - exact) < 4.0 * pooled_se


def test_mc_deterministic_and_seed_sensitive():
    target = Ball(np.zeros(3), 1.0)
    env = Ball(np.zeros(3), 3.0)
    a = mu_hit_mc(3, target, env, 10_000, 42)
    b = mu_hit_mc(3, target, env, 10_000, 42)
    c = mu_hit_mc(3, target, env, 10_000, 43)
    assert a.value == b.value and a.stderr == b.stderr
    assert a.value != c.value


def test_containment_enforced():
    with pytest.raises(ContainmentViolation):
        mu_hit_mc(3, Ball(np.zeros(3), 5.0), Ball(np.zeros(3), 2.0), 100, 0)
    with pytest.raises(ContainmentViolation):
        mu_hit_mc(
            3, Ball(np.array([3.0, 0, 0]), 1.0), Ball(np.zeros(3), 2.0), 100, 0
        )


def test_shared_sample_nested_monotone():
    # Nested targets on one shared line sample: estimates ordered pathwise.
    env = Ball(np.zeros(3), 5.0)
    targets = [Ball(np.zeros(3), r) for r in [0.5, 1.5, 3.0, 5.0]]
    vals = [mv.value for mv in mu_hit_mc_shared(3, targets, env, 20_000, 9)]
    assert all(vals[i] < vals[i + 1] for i in range(len(vals) - 1))
    exact = [mu_hit_ball_exact(3, np.zeros(3), r).value for r in [0.5, 1.5, 3.0, 5.0]]
    assert abs(vals[-1] - exact[-1]) < 1e-12  # target == envelope


def test_rotation_invariance_of_estimates():
    # The measure is rotation invariant; rotating target and envelope
    # together changes nothing statistically.  Use precise estimates.
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    c = np.array([1.0, 0.5, -0.3])
    base = mu_hit_mc(3, Ball(c, 1.0), Ball(np.zeros(3), 3.0), 400_000, 1)
    rot = mu_hit_mc(3, Ball(q @ c, 1.0), Ball(np.zeros(3), 3.0), 400_000, 2)
    se = np.hypot(base.stderr, rot.stderr)
    assert abs(base.value - rot.value) < 4.0 * se


def test_cap_fraction_values():
    # d=3: cap fraction = (1 - cos phi0) / 2.
    for phi0 in [0.2, 0.7, 1.2]:
        assert abs(cap_fraction(3, phi0) - (1 - np.cos(phi0)) / 2) < 1e-12
    # d=2: arc fraction = phi0 / pi.
    for phi0 in [0.3, 1.0]:
        assert abs(cap_fraction(2, phi0) - phi0 / np.pi) < 1e-9
    assert abs(cap_fraction(5, np.pi / 2) - 0.5) < 1e-12


def test_cap_weights_integrate_to_one():
    # E[w(U)] over the mixture equals 1: the defensive mixture is a density.
    cap = make_direction_cap(4, np.array([1.0, 0, 0, 0]), 0.4)
    rng = np.random.default_rng(11)
    from cylperc.measure import _draw_cap_directions
    from cylperc._draw import uniform_directions

    n = 200_000
    use_cap = rng.random(n) < 0.5
    dirs = uniform_directions(4, n, rng)
    dirs[use_cap] = _draw_cap_directions(4, cap, int(use_cap.sum()), rng)
    w = cap.weights(dirs)
    assert abs(w.mean() - 1.0) < 4.0 * w.std() / np.sqrt(n)


def test_joint_mass_cap_matches_plain():
    # Importance sampling on/off agree within combined error bars.
    a = Ball(np.zeros(3), 1.0)
    b = Ball(np.array([12.0, 0.0, 0.0]), 1.0)
    env = Ball(np.zeros(3), 1.0)
    with_cap = mu_joint_hit_mc(3, a, b, env, 200_000, 21, importance="auto")
    plain = mu_joint_hit_mc(3, a, b, env, 200_000, 22, importance="none")
    se = np.hypot(with_cap.stderr, plain.stderr)
    assert abs(with_cap.value - plain.value) < 4.0 * se
    assert with_cap.stderr < plain.stderr  # the tilt must actually help


def test_point_pair_joint_mass_symmetric_in_d2_exact():
    # d=2: lines within 1 of both of two points at separation s.  The mass
    # can be computed by 1D quadrature over the direction angle:
    # integrand 2*max(0, 2 - s|sin t|)/2 averaged over t in [0, pi), times
    # total normalization pi... cross-check MC against quadrature.
    s = 5.0
    from scipy.integrate import quad

    # For direction at angle t to the separation axis, the offsets hitting
    # both unit discs form an interval of length max(0, 2 - s|sin t|).
    val, _ = quad(lambda t: max(0.0, 2.0 - s * abs(np.sin(t))), 0, np.pi)
    exact = val / np.pi  # uniform angle on [0, pi) x Lebesgue offset
    m, se = point_pair_joint_mass(2, s, 400_000, 31)
    assert abs(m - exact) < 5.0 * se
    assert se < 0.02


def test_point_pair_joint_mass_scaling_d3():
    # d=3 point-pair joint mass decays like s^{-2}: doubling s quarters it.
    m1, se1 = point_pair_joint_mass(3, 20.0, 300_000, 41)
    m2, se2 = point_pair_joint_mass(3, 40.0, 300_000, 42)
    ratio = m1 / m2
    assert 3.6 < ratio < 4.4


def test_separation_too_small():
    with pytest.raises(SeparationTooSmall):
        point_pair_joint_mass(3, 2.0, 100, 0)


def test_covariance_identity_vs_direct_simulation():
    # cov = e^{-2 u kappa} (e^{u m} - 1) must match the empirical covariance
    # of the two vacancy indicators under the sampled process.
    from cylperc.sampler import WindowSpec, sample_process
    from cylperc.geometry import batch_dist_point

    d, u, s = 3, 0.3, 6.0
    cov, cov_se = point_pair_covariance(d, u, s, 400_000, 51)
    x = np.zeros(d)
    y = np.array([s, 0.0, 0.0])
    win = WindowSpec(d, y / 2.0, s / 2.0 + 1.0)
    n_rep = 4000
    vac = np.empty((n_rep, 2), dtype=bool)
    for i in range(n_rep):
        sm = sample_process(win, u, 777, i, "cov-check")
        dx = batch_dist_point(sm.directions, sm.anchors, x)
        dy = batch_dist_point(sm.directions, sm.anchors, y)
        vac[i] = [(dx > 1.0).all(), (dy > 1.0).all()]
    emp = np.cov(vac[:, 0].astype(float), vac[:, 1].astype(float))[0, 1]
    # Empirical covariance of ~0.08-mean Bernoullis over 4000 reps.
    assert abs(emp - cov) < 5.0 / np.sqrt(n_rep) * 0.3


def test_segment_joint_mass_matches_ball_envelope():
    # The exact segment-hitting sampler must agree with plain envelope
    # sampling around the segment, on a short segment where both work.
    seg = Segment(np.array([-2.0, 0, 0]), np.array([2.0, 0, 0]))
    other = Ball(np.array([0.0, 8.0, 0.0]), 1.0)
    fast = mu_joint_hit_mc(3, seg, other, None, 300_000, 61)
    # Swap the roles (the joint mass is symmetric): ball-envelope path.
    slow = mu_joint_hit_mc(3, other, seg, Ball(other.center, other.radius),
                           300_000, 62, importance="none")
    se = np.hypot(fast.stderr, slow.stderr)
    assert abs(fast.value - slow.value) < 4.0 * se


def test_segment_mass_alone_matches_stadium_formula():
    # mu(L_segment) for a segment of length L in d: kappa_{d-1} + L kappa_{d-2}
    # ... averaged over directions of |P(e)|.  Check via the sampler's mass
    # against hitting the segment itself (probability 1 by construction).
    seg = Segment(np.zeros(3), np.array([6.0, 0.0, 0.0]))
    mv = mu_joint_hit_mc(3, seg, seg, None, 100_000, 71)
    # E|P(e)| for isotropic direction in d=3 is L * pi/4.
    want = np.pi + 6.0 * (np.pi / 4.0) * 2.0
    assert abs(mv.value - want) < 5.0 * max(mv.stderr, 1e-3)


def test_joint_hit_replicates_shape_and_mean():
    a = Ball(np.zeros(3), 1.0)
    b = Ball(np.array([8.0, 0, 0]), 1.0)
    env = Ball(np.zeros(3), 1.0)
    reps = joint_hit_replicates(3, a, b, env, 40_000, 20, 81)
    assert reps.shape == (20,)
    single = mu_joint_hit_mc(3, a, b, env, 40_000, 91)
    se = reps.std(ddof=1) / np.sqrt(len(reps))
    assert abs(reps.mean() - single.value) < 5.0 * np.hypot(se, single.stderr)
