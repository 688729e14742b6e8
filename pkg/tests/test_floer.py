import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slowgrowth.dynamics import TwistProfile
from slowgrowth.errors import DomainError, NumericalError, UnsupportedModelError
from slowgrowth.floer import (
    ROOT_TOL,
    GradedRanks,
    cf_ranks,
    fiber_image_class,
    gap_certificate,
    geometric_intersections,
    hf_eligible,
    hf_rank,
    intersection_points,
    variation_pairing,
)
from slowgrowth.jacobi import (
    complex_projective,
    cp_quotient,
    quaternionic_projective,
    real_projective,
    sphere,
    sphere_quotient,
    standard_models,
)

ALL = standard_models(16)
DELTAS = st.floats(0.01, 0.49)


def expected_grading(model, m):
    k, d = model.k, model.d
    if k >= 1:
        degs = [i * (k + d - 1) for i in range(m)] + [i * (k + d - 1) + k for i in range(m)]
        return {deg: 1 for deg in sorted(degs)}
    if d > 1:
        return {i * (d - 1): 2 for i in range(m)}
    return {0: 2 * m}


def test_intersection_points_m1():
    pts = intersection_points(m=1, delta=0.25)
    assert [p.tau for p in pts] == [0.25, 0.75]
    assert pts.points[0].r < pts.points[1].r
    assert pts.indices == [0, 1]


def test_intersection_points_m2_on_s2():
    pts = intersection_points(m=2, delta=0.25, model=sphere(2))
    assert [p.tau for p in pts] == [0.25, 0.75, 1.25, 1.75]
    assert pts.indices == [0, 1, 2, 3]
    assert all(p.residual <= ROOT_TOL for p in pts)
    assert all(1 / 3 < p.r < 2 / 3 for p in pts)


def test_intersection_points_validation():
    with pytest.raises(DomainError):
        intersection_points(TwistProfile.generic())
    with pytest.raises(DomainError):
        intersection_points(m=0)
    with pytest.raises(DomainError):
        intersection_points(delta=0.5)


def test_malformed_profile_is_not_bracketed():
    prof = TwistProfile.floer()
    from slowgrowth.floer import _root
    with pytest.raises(NumericalError):
        _root(prof, 1, 1.5)


@settings(max_examples=60, deadline=None)
@given(m=st.integers(1, 64), delta=DELTAS)
def test_intersection_count_and_roots(m, delta):
    prof = TwistProfile.floer()
    pts = intersection_points(prof, m, delta)
    assert len(pts) == 2 * m
    taus = [p.tau for p in pts]
    assert all(b > a for a, b in zip(taus, taus[1:]))
    for p in pts:
        assert abs(m * float(prof.d1(p.r)) - p.tau) <= ROOT_TOL


@pytest.mark.parametrize("model, m, ranks", [
    (sphere(1), 3, {0: 6}),
    (sphere(2), 2, {0: 1, 1: 1, 2: 1, 3: 1}),
    (real_projective(3), 2, {0: 2, 2: 2}),
    (sphere(3), 2, {0: 1, 2: 1, 4: 1, 6: 1}),
])
def test_cf_rank_examples(model, m, ranks):
    assert cf_ranks(model, m).as_dict() == ranks


@settings(max_examples=150, deadline=None)
@given(model=st.sampled_from(ALL), m=st.integers(1, 64), delta=DELTAS)
def test_cf_total_and_grading(model, m, delta):
    ranks = cf_ranks(model, m, delta)
    assert ranks.total == 2 * m
    assert ranks.as_dict() == expected_grading(model, m)


def test_hf_rank_eligibility():
    assert hf_eligible(complex_projective(3)) and hf_eligible(sphere(2))
    assert hf_eligible(real_projective(2)) and hf_eligible(quaternionic_projective(1))
    assert not hf_eligible(cp_quotient(1))
    with pytest.raises(UnsupportedModelError):
        hf_rank(cp_quotient(1), 2)
    for m in range(1, 6):
        assert hf_rank(quaternionic_projective(1), m).total == 2 * m
    s3 = hf_rank(sphere(3), 2)
    assert s3.degrees == [0, 2, 4, 6] and gap_certificate(s3)


def test_gap_certificate_detects_adjacency():
    assert not gap_certificate(GradedRanks({0: 1, 1: 1}))
    assert gap_certificate(GradedRanks({0: 2, 2: 2}))
    with pytest.raises(DomainError):
        GradedRanks({-1: 1})


@pytest.mark.parametrize("model, m, value", [
    (sphere(3), 4, 8), (sphere(2), 3, 0), (sphere(2), 7, 0), (sphere(5), 0, 0),
])
def test_variation_examples(model, m, value):
    assert variation_pairing(model, m) == value


@settings(max_examples=150, deadline=None)
@given(model=st.sampled_from([m for m in ALL if m.orientable]), m=st.integers(0, 64))
def test_variation_parity_law(model, m):
    var = variation_pairing(model, m)
    if model.k % 2:
        assert var == 0
    elif model.d % 2:
        assert var == 2 * m


def test_variation_needs_orientation():
    with pytest.raises(UnsupportedModelError):
        variation_pairing(real_projective(2), 1)


def test_fiber_image_class():
    s3 = sphere(3)
    assert fiber_image_class(s3, 1, 5) == (10, 1)
    assert fiber_image_class(s3, 2, 0) == (0, 1)
    for n in range(6):
        assert fiber_image_class(sphere_quotient(5, True), 3, n)[0] == n * variation_pairing(
            sphere_quotient(5, True), 3)
    with pytest.raises(UnsupportedModelError):
        fiber_image_class(sphere(2), 1, 1)


@settings(max_examples=50, deadline=None)
@given(model=st.sampled_from(ALL), m=st.integers(1, 16), d1=DELTAS, d2=DELTAS)
def test_integer_outputs_do_not_depend_on_delta(model, m, d1, d2):
    assert cf_ranks(model, m, d1) == cf_ranks(model, m, d2)
    if model.orientable:
        assert variation_pairing(model, m, d1) == variation_pairing(model, m, d2)


@pytest.mark.parametrize("m", [1, 2])
def test_geometric_count_matches_combinatorics(m):
    geo = geometric_intersections(m)
    assert geo.count == 2 * m
    exact = np.array([p.r for p in intersection_points(m=m)])
    assert np.all(np.abs(np.sort(geo.radii) - exact) <= 2 * geo.cell_size)
