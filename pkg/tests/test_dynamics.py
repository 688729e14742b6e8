import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slowgrowth.dynamics import (
    SYMPL_TOL,
    ClassicalHam,
    FiberShift,
    FourierPotential,
    Identity,
    PlateauProfile,
    RadialBall,
    Twist,
    TwistProfile,
    apply,
    classical_orbit,
    jacobian,
    operator_norm,
    random_support_points,
    symplectic_residual,
)
from slowgrowth.errors import DomainError
from slowgrowth.geometry import CylinderTS1, EuclideanBall, RoundSphereCotangent

RNG = np.random.default_rng(12345)

MAPS = {
    "radial-ball": RadialBall.for_ball(4),
    "twist-cylinder": Twist(CylinderTS1()),
    "twist-sphere": Twist(RoundSphereCotangent(d=2)),
    "twist-sphere3-m2": Twist(RoundSphereCotangent(d=3), m=2),
    "fiber-shift": FiberShift(),
    "pendulum": ClassicalHam(),
}


# ---------------------------------------------------------------------------
# profiles


def test_generic_profile_knots():
    prof = TwistProfile.generic()
    r = np.linspace(0, prof.r0, 50)
    assert np.all(prof.value(r) == 0) and np.all(prof.d1(r) == 0)
    r = np.linspace(prof.r1, 3, 50)
    assert np.all(prof.d1(r) == 1)


@pytest.mark.parametrize("prof", [TwistProfile.generic(), TwistProfile.floer(),
                                  PlateauProfile.for_ball(4), PlateauProfile(0.125, 0.875)])
def test_profiles_are_c2_across_knots(prof):
    knots = [prof.r0, prof.r1] if isinstance(prof, TwistProfile) else \
        [prof.a, prof.b] + ([prof.knee] if prof.knee else [])
    # the knee profile has |f'''| ~ 1e5, so probe very close to each knot
    h = 1e-9
    for k in knots:
        assert prof.value(k + h) == pytest.approx(prof.value(k - h), abs=1e-5)
        assert prof.d1(k + h) == pytest.approx(prof.d1(k - h), abs=1e-4)
        assert prof.d2(k + h) == pytest.approx(prof.d2(k - h), abs=1e-3)


def test_profile_derivatives_match_finite_differences():
    for prof in (TwistProfile.generic(), TwistProfile.floer(), PlateauProfile.for_ball(4)):
        r = np.linspace(0.05, 0.95, 301)
        h = 1e-6
        assert np.allclose((prof.value(r + h) - prof.value(r - h)) / (2 * h), prof.d1(r), atol=1e-5)
        # f''' jumps at the knots; scale the tolerance by the size of f''
        scale = max(1.0, float(np.max(np.abs(prof.d2(r)))))
        assert np.allclose((prof.d1(r + h) - prof.d1(r - h)) / (2 * h), prof.d2(r),
                           atol=1e-4 * scale)


def test_floer_profile_is_strictly_convex_inside():
    prof = TwistProfile.floer()
    r = np.linspace(1 / 3, 2 / 3, 1002)[1:-1]
    assert np.all(prof.d2(r) > 0)


def test_plateau_profile_iff_conditions():
    prof = PlateauProfile.for_ball(4)
    assert prof.a == 1 / 8 and prof.b == 7 / 8
    assert np.all(prof.value(np.linspace(0, prof.a, 20)) == 1.0)
    assert np.all(prof.value(np.linspace(prof.b, 2, 20)) == 0.0)
    inside = np.linspace(prof.a, prof.b, 1000)[1:-1]
    v = prof.value(inside)
    assert np.all((v > 0) & (v < 1))


# ---------------------------------------------------------------------------
# apply


def test_radial_ball_fixes_plateau():
    ball = RadialBall.for_ball(4)
    x = RNG.normal(size=(50, 4))
    x *= (math.sqrt(ball.profile.a) * RNG.uniform(0, 1, 50) / np.linalg.norm(x, axis=-1))[:, None]
    assert np.array_equal(apply(ball, x, 17), x)


def test_radial_ball_fixes_outside_support():
    ball = RadialBall.for_ball(4)
    x = np.array([0.0, 0.0, 0.0, 0.95])
    assert np.array_equal(apply(ball, x, 9), x)


def test_cylinder_twist_unit_speed():
    tw = Twist(CylinderTS1(1.0))
    for n in (1, 3, 10):
        out = apply(tw, [0.3, 0.9], n)
        assert out == pytest.approx([0.3, 0.9], abs=1e-12)
        out = apply(tw, [0.3, 0.9], n, wrap=False)
        assert out[0] == pytest.approx(0.3 + n)
        assert apply(tw, [0.3, -0.9], n, wrap=False)[0] == pytest.approx(0.3 - n)


def test_sphere_twist_identity_outside_r1():
    model = RoundSphereCotangent(d=2)
    tw = Twist(model)
    x = model.north_pole().copy()
    x[3] = 0.9
    assert apply(tw, x, 1) == pytest.approx(x, abs=1e-15)


def test_apply_rejects_off_manifold_points():
    with pytest.raises(DomainError):
        apply(Twist(RoundSphereCotangent(d=2)), np.zeros(6), 1)
    with pytest.raises(DomainError):
        apply(RadialBall.for_ball(4), [0.0, 1.0], 1)
    with pytest.raises(DomainError):
        apply(Identity(EuclideanBall(2)), [0.0, 0.0], -1)


def test_twist_group_law():
    model = RoundSphereCotangent(d=2)
    x = random_support_points(Twist(model), 100, RNG)
    for a, b in ((1, 2), (2, -3), (-1, 4)):
        lhs = apply(Twist(model, m=a), apply(Twist(model, m=b), x, 1), 1)
        rhs = apply(Twist(model, m=a + b), x, 1) if a + b else x
        assert np.max(np.abs(lhs - rhs)) < 1e-9


def test_norm_preservation():
    model = RoundSphereCotangent(d=2)
    tw = Twist(model)
    x = random_support_points(tw, 200, RNG)
    y = apply(tw, x, 7)
    assert np.allclose(np.linalg.norm(model.split(y)[1], axis=-1),
                       np.linalg.norm(model.split(x)[1], axis=-1), atol=1e-13)
    ball = RadialBall.for_ball(4)
    x = random_support_points(ball, 200, RNG)
    assert np.allclose(np.linalg.norm(apply(ball, x, 11), axis=-1), np.linalg.norm(x, axis=-1),
                       atol=1e-13)


def test_twist_has_no_torsion_on_fibers():
    model = RoundSphereCotangent(d=2)
    tw = Twist(model)
    x = model.north_pole().copy()
    x[3] = 0.5 + 1e-3  # f' irrational-looking: not a rational turn count
    for n in range(1, 51):
        assert np.linalg.norm(apply(tw, x, n) - x) > 1e-6


# ---------------------------------------------------------------------------
# Jacobians


def test_jacobian_identity_at_zero_iterates():
    x = random_support_points(MAPS["twist-sphere"], 3, RNG)
    assert np.array_equal(jacobian(MAPS["twist-sphere"], x, 0), np.broadcast_to(np.eye(4), (3, 4, 4)))


def test_twist_fiber_line_norm():
    model = RoundSphereCotangent(d=2)
    tw = Twist(model)
    x = random_support_points(tw, 20, RNG)
    q, p = model.split(x)
    r = np.linalg.norm(p, axis=-1)
    for n in (1, 5, 40):
        amb = tw.ambient_jacobian(x, n)
        v = np.concatenate([np.zeros_like(p), p / r[:, None]], axis=-1)
        image = (amb @ v[..., None])
        coords = model.frame_coordinates(apply(tw, x, n, wrap=False), image)[..., 0]
        t = tw.m * n
        assert np.allclose(np.linalg.norm(coords, axis=-1),
                           np.sqrt((tw.profile.d2(r) * t) ** 2 + 1), rtol=1e-10)


def _fd_jacobian(map_, x, n, h=1e-6):
    cols = []
    for e in np.eye(x.shape[-1]):
        cols.append((apply(map_, x + h * e, n, wrap=False) - apply(map_, x - h * e, n, wrap=False))
                    / (2 * h))
    return np.stack(cols, axis=-1)


def test_radial_ball_jacobian_matches_finite_differences():
    ball = RadialBall.for_ball(4)
    x = random_support_points(ball, 100, RNG)
    for k in range(100):
        assert np.allclose(_fd_jacobian(ball, x[k], 3), ball.ambient_jacobian(x[k], 3), atol=1e-5)


def test_pendulum_jacobian_matches_finite_differences():
    ham = ClassicalHam()
    x = random_support_points(ham, 5, RNG)
    for k in range(5):
        assert np.allclose(_fd_jacobian(ham, x[k], 2), ham.ambient_jacobian(x[k], 2), atol=1e-5)


@pytest.mark.parametrize("name", sorted(MAPS))
def test_symplectic_at_random_support_points(name):
    map_ = MAPS[name]
    count = 50 if name == "pendulum" else 1000
    x = random_support_points(map_, count, RNG)
    assert symplectic_residual(jacobian(map_, x, 1)).max() < SYMPL_TOL


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 60),
       name=st.sampled_from(["radial-ball", "twist-cylinder", "twist-sphere", "fiber-shift"]))
def test_symplecticity_property(seed, n, name):
    map_ = MAPS[name]
    x = random_support_points(map_, 20, np.random.default_rng(seed))
    jac = jacobian(map_, x, n)
    # residual scales with |J|^2 for closed forms evaluated in floating point
    scale = np.maximum(1.0, operator_norm(jac)) ** 2
    assert np.all(symplectic_residual(jac) / scale < SYMPL_TOL)


def test_energy_conservation_autonomous_pendulum():
    ham = ClassicalHam()
    x = random_support_points(ham, 30, RNG)
    h0 = ham.hamiltonian(0.0, x)
    h1 = ham.hamiltonian(0.0, apply(ham, x, 1, wrap=False))
    # Strang splitting: O(h^2) energy error with h = 1e-3
    assert np.max(np.abs(h1 - h0)) < 10 * ham.step ** 2


# ---------------------------------------------------------------------------
# periodic orbits


def test_classical_orbit_equilibria():
    ham = ClassicalHam()
    stable = classical_orbit(ham, [0.0, 0.0])
    unstable = classical_orbit(ham, [0.5, 0.0])
    assert np.allclose(stable.points, [0.0, 0.0], atol=1e-12)
    assert np.allclose(unstable.points, [0.5, 0.0], atol=1e-12)
    near = classical_orbit(ham, [0.03, 0.02])
    assert near is not None and np.allclose(near.points[0], [0.0, 0.0], atol=1e-9)


def test_classical_orbit_not_found_signal():
    ham = ClassicalHam(FourierPotential.pendulum(0.3))
    assert classical_orbit(ham, [0.25, 5.0], max_iter=2) is None
