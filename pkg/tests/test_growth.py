import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import ball_oracle as oracle
from slowgrowth.dynamics import (
    Identity,
    PlateauProfile,
    RadialBall,
    Twist,
    TwistProfile,
    random_support_points,
)
from slowgrowth.errors import DomainError
from slowgrowth.geometry import CylinderTS1, EuclideanBall, RoundSphereCotangent, ball_witness, fiber_disc
from slowgrowth.growth import (
    GrowthSeries,
    RefinePolicy,
    gamma_series,
    log_schedule,
    odd_even_check,
    slow_exponent,
    volume_series,
    witness_density,
    witness_volume,
)

# witness volumes produced by tests/oracles/ball_oracle.py (scipy adaptive quadrature)
FROZEN = {
    (1, 1): 30.133862380750447, (1, 8): 238.47579824278395,
    (1, 38): 1131.4232957589027, (1, 512): 15240.017612448462,
    (2, 1): 3.886663606699815, (2, 8): 30.42756740339452,
    (2, 38): 144.17469037419824, (2, 512): 1941.379454939089,
    (3, 1): 0.08151934272696393, (3, 8): 0.5465441910470641,
    (3, 38): 2.5395326048176994, (3, 512): 34.02876324834691,
}

BALL = RadialBall(PlateauProfile.for_ball(4), EuclideanBall(4))


def test_log_schedule_examples():
    assert log_schedule(512) == [1, 2, 3, 5, 8, 11, 17, 26, 38, 58, 86, 130, 195, 292, 438, 512]
    assert log_schedule(5) == [1, 2, 3, 4, 5]
    assert log_schedule(1) == [1]
    with pytest.raises(DomainError):
        log_schedule(0)


@settings(max_examples=40, deadline=None)
@given(n_max=st.integers(2, 5000))
def test_log_schedule_properties(n_max):
    s = log_schedule(n_max)
    assert s[0] == 1 and s[-1] == n_max
    assert all(b > a for a, b in zip(s, s[1:]))
    assert len(s) >= min(16, n_max)


def _series(ns, vals, meaning="test"):
    return GrowthSeries(ns, vals, np.zeros(len(ns)), meaning)


def test_slow_exponent_of_power_laws():
    ns = np.array(log_schedule(512))
    assert slow_exponent(_series(ns, np.full(ns.size, 3.0))).slope == pytest.approx(0, abs=1e-12)
    est = slow_exponent(_series(ns, 2.5 * ns))
    assert est.slope == pytest.approx(1, abs=1e-12)
    assert est.residual < 1e-12 and est.window == (38, 512) and est.samples == 8
    assert slow_exponent(_series(ns, ns ** 2.0)).slope == pytest.approx(2, abs=1e-12)


def test_slow_exponent_rejects_bad_input():
    ns = np.array(log_schedule(512))
    vals = np.ones(ns.size)
    vals[3] = 0.0
    with pytest.raises(DomainError):
        slow_exponent(_series(ns, vals))
    with pytest.raises(DomainError):
        slow_exponent(_series([1, 2, 3], [1.0, 2.0, 3.0]))
    with pytest.raises(DomainError):
        _series([1, 1, 2], [1.0, 1.0, 1.0])


def test_identity_volume_series_is_constant():
    model = EuclideanBall(4)
    cube = ball_witness(model, 2)
    series = volume_series(Identity(model), cube, 16)
    assert np.ptp(series.values) == 0
    assert series.values[0] == pytest.approx(1 / 9, rel=1e-12)


def test_volume_series_needs_matching_model_and_horizon():
    cube = ball_witness(EuclideanBall(2), 1)
    with pytest.raises(DomainError):
        volume_series(BALL, cube, 16)
    with pytest.raises(DomainError):
        volume_series(BALL, ball_witness(BALL.model, 1), 8)


def test_closed_form_density_matches_oracle_gram():
    rng = np.random.default_rng(3)
    for i in (1, 2, 3):
        for n in (1, 38, 512):
            t = rng.uniform(0, 1 / (i + 1), (10, i))
            ours = witness_density(BALL.profile, i, t, n)
            ref = [oracle.fd_density(i, row, n) for row in t]
            assert np.allclose(ours, ref, rtol=1e-4)


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_witness_volume_matches_frozen_oracle(key):
    i, n = key
    assert witness_volume(BALL.profile, i, n) == pytest.approx(FROZEN[key], rel=1e-4)


def test_sigma1_mesh_volume_matches_oracle():
    series = volume_series(BALL, ball_witness(BALL.model, 1), 38, schedule=[1, 8, 38])
    for n, value, _ in series.rows():
        assert value == pytest.approx(FROZEN[(1, n)], rel=5e-3)


def test_cylinder_twist_volume_per_iterate():
    model = CylinderTS1(1.0)
    twist = Twist(model, TwistProfile.generic())
    series = volume_series(twist, fiber_disc(model, [0.0], 1.0, 11), 512)
    for n, value, _ in series.rows():
        if n >= 256:
            assert value / n == pytest.approx(2.0, rel=0.05)
    assert slow_exponent(series).slope == pytest.approx(1, abs=0.05)


def test_truncated_series_stops_at_budget():
    model = CylinderTS1(1.0)
    twist = Twist(model, TwistProfile.generic())
    policy = RefinePolicy(max_vertices=300)
    series = volume_series(twist, fiber_disc(model, [0.0], 1.0, 11), 512, policy)
    assert series.truncated
    assert 0 < len(series) < 16


def test_refine_policy_rejects_nonpositive_tolerances():
    with pytest.raises(DomainError):
        RefinePolicy(rel_tol=0)
    with pytest.raises(DomainError):
        RefinePolicy(edge_len_max=-1)


def test_gamma_series_identity_is_one():
    model = RoundSphereCotangent(d=2)
    ident = Identity(model)
    pts = random_support_points(Twist(model), 120, np.random.default_rng(0))
    series = gamma_series(ident, pts, 64)
    assert np.allclose(series.values, 1.0, atol=1e-12)
    with pytest.raises(DomainError):
        gamma_series(ident, pts[:10], 64)


def test_gamma_series_bounded_by_linear_law():
    model = RoundSphereCotangent(d=2)
    twist = Twist(model, TwistProfile.generic())
    pts = random_support_points(twist, 200, np.random.default_rng(1))
    series = gamma_series(twist, pts, 256)
    bound = 1 + series.ns * twist.m * twist.profile.max_d2()
    assert np.all(series.values <= bound * (1 + 1e-9))
    assert slow_exponent(series).slope == pytest.approx(1, abs=0.1)


def test_odd_even_inequality_on_cylinder():
    model = CylinderTS1(1.0)
    twist = Twist(model, TwistProfile.generic())
    g = twist.profile.max_d2()
    # operator norm of the shear [[1, g], [0, 1]]
    step = (g + math.sqrt(g * g + 4)) / 2
    rows = odd_even_check(twist, fiber_disc(model, [0.0], 1.0, 11), [1, 4, 16], step)
    assert all(r["holds_sharp"] and r["holds_dim"] for r in rows)
