import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyspec import geometry as geo, smoothed as sm
from polyspec.corpus import canonical_complexes
from polyspec.rng import Stream


@pytest.fixture(scope="module")
def unit_cube():
    return geo.facets_of_vpolytope(geo.cube(3, half=0.5), allow_nonsimplicial=True)


def test_two_stage_split():
    s1, s2 = sm.two_stage_split(1.0, 2, exponent=1)
    assert (s1, s2) == pytest.approx((2 / math.sqrt(5), 1 / math.sqrt(5)))
    s1, s2 = sm.two_stage_split(0.1, 30)
    assert math.hypot(s1, s2) == pytest.approx(0.1)
    assert s1 / s2 == pytest.approx(30.0**8)
    with pytest.raises(ValueError):
        sm.two_stage_split(0.0, 10)


def test_alpha():
    assert sm.alpha_of(0.1, 10, 3) == pytest.approx(0.6 * math.sqrt(3 * math.log(10)))
    assert sm.alpha_of(0.1, 10, 3) == pytest.approx(1.5770, abs=1e-4)


def test_instance_construction():
    base = sm.sphere_base(20, 3, 0)
    np.testing.assert_allclose(np.linalg.norm(base, axis=1), 1.0)
    inst = sm.sample_instance(base, 0.1, seed=4)
    np.testing.assert_allclose(inst.v, base + inst.g)
    assert (inst.m, inst.d) == (20, 3)
    assert inst.P().m == 20
    again = sm.sample_instance(base, 0.1, seed=4)
    np.testing.assert_array_equal(inst.g, again.g)
    with pytest.raises(ValueError):
        sm.SmoothedInstance(2 * base, 0.1, 0 * base, 2 * base, 0)


def test_assumptions_report():
    base = sm.sphere_base(30, 3, 1)
    inst = sm.sample_instance(base, 1e-3, seed=1)
    rep = sm.check_assumptions(inst)
    assert rep.rBest > 0.3 and rep.satisfiesR
    assert rep.satisfiesS  # alpha ~ 0.011 < r / 9
    assert rep.eventB and rep.eventC
    assert rep.logEps == pytest.approx(-15 * math.log(30))
    ok, _ = sm.scaled_containment_check(inst, rep.rBest)
    assert ok


def test_leave_one_out_inradius_of_cross_polytope():
    # dropping any vertex of the octahedron leaves congruent square pyramids
    r = sm.leave_one_out_inradius(geo.cross_polytope(3).points)
    P = geo.hrep(geo.VPolytope(geo.cross_polytope(3).points[1:]))
    assert r == pytest.approx(geo.inradius(P)[0])
    assert 0 < r < 1 / math.sqrt(3)


def test_roundedness_trial():
    base = sm.sphere_base(12, 3, 2)
    res = sm.roundedness_trial(base, 0.2, trials=5, seed=0)
    assert res.ratios.shape == (5,) and np.all(res.ratios > 0)
    assert res.failFraction == 0.0
    with pytest.raises(ValueError):
        sm.roundedness_trial(base[:3], 0.2, trials=1, seed=0)


def test_polytope_distance_matches_box_formula(unit_cube):
    dist = sm.PolytopeDistance(unit_cube)
    X = Stream(3).uniform((2000, 3)) * 3 - 1.5
    expect = np.linalg.norm(np.maximum(np.abs(X) - 0.5, 0.0), axis=1)
    np.testing.assert_allclose(dist.distance(X), expect, atol=1e-12)
    d, pts = dist.nearest(X)
    np.testing.assert_allclose(np.linalg.norm(X - pts, axis=1), d, atol=1e-12)


def test_polytope_distance_general_dimension():
    fc = canonical_complexes()["cube4"]
    dist = sm.PolytopeDistance(fc)
    X = Stream(4).uniform((200, 4)) * 4 - 2
    expect = np.linalg.norm(np.maximum(np.abs(X) - 1.0, 0.0), axis=1)
    np.testing.assert_allclose(dist.distance(X), expect, atol=1e-8)


def test_constants():
    assert sm.crofton_constant(3) == pytest.approx(math.pi)
    assert sm.crofton_constant(4) == pytest.approx(math.pi**1.5 / math.gamma(1.5))
    assert math.exp(sm.log_sphere_area(3)) == pytest.approx(4 * math.pi)
    assert math.exp(sm.log_ball_volume(3)) == pytest.approx(4 * math.pi / 3)


def test_sampler_surface_area(unit_cube):
    ps = sm.sample_plane(unit_cube, 0.1, 20_000, seed=3)
    assert ps.rejected == 0 and ps.n == 20_000
    est, se = sm.surface_area_estimate(ps, 3)
    exact = sm.surface_area_offset_d3(unit_cube, 0.2)
    assert abs(est - exact) <= 4 * se
    # base points lie on the boundary of the offset body
    dist = sm.PolytopeDistance(unit_cube)
    np.testing.assert_allclose(dist.distance(ps.a), 0.2, atol=1e-9)
    np.testing.assert_allclose(np.einsum("nki,nkj->nij", ps.frames, ps.frames), np.broadcast_to(np.eye(2), (ps.n, 2, 2)), atol=1e-12)


def test_plane_section():
    cube = geo.cube_h(3)
    frame = np.array([[1.0, 0], [0, 1], [0, 0]])
    n, pts = sm.plane_section(np.zeros(3), frame, cube)
    assert n == 4
    np.testing.assert_allclose(np.abs(pts[:, :2]), 1.0)
    np.testing.assert_allclose(pts[:, 2], 0.0)
    n, _ = sm.plane_section(np.array([0, 0, 5.0]), frame, cube)
    assert n == 0
    tilted = np.array([[1.0, 0], [0, 1 / math.sqrt(2)], [0, 1 / math.sqrt(2)]])
    n, _ = sm.plane_section(np.zeros(3), tilted, cube)
    assert n == 4


def test_hexagonal_section():
    # the plane x + y + z = 0 cuts the cube in a regular hexagon
    u = np.array([1, -1, 0]) / math.sqrt(2)
    w = np.array([1, 1, -2]) / math.sqrt(6)
    n, pts = sm.plane_section(np.zeros(3), np.stack([u, w], axis=1), geo.cube_h(3))
    assert n == 6
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), math.sqrt(2))


def test_quadrature_unbiased_small(unit_cube):
    q = sm.quadrature_perimeter_estimate(unit_cube, 20_000, seed=5)
    assert q.exact == pytest.approx(12.0)
    assert abs(q.z) <= 4.0 and not q.flagged
    assert q.hitCounts.sum() > 1000 and q.multiHits == 0


def test_quadrature_with_wider_sampling_body(unit_cube):
    q = sm.quadrature_perimeter_estimate(unit_cube, 20_000, seed=6, L0=geo.cube(3))
    assert abs(q.z) <= 4.0


def test_intersection_constant():
    assert sm.intersection_constant_check(3, 200_000, seed=0) == pytest.approx(math.sqrt(3) / 2, rel=0.01)
    with pytest.raises(ValueError):
        sm.intersection_constant_check(2, 10, seed=0)


def test_segment_hit_rate(unit_cube):
    ps = sm.sample_plane(unit_cube, 0.1, 5000, seed=1)
    rate, contained = sm.segment_hit_rate(ps, [0, 0, 0], [1, 0, 0], 0.25)
    assert 0 < rate < 1 and contained == 0
    longer, _ = sm.segment_hit_rate(ps, [0, 0, 0], [1, 0, 0], 0.5)
    assert longer >= rate


def test_steiner_unit_cube(unit_cube):
    c = sm.steiner_coefficients(unit_cube)
    assert (c.volume, c.surface) == pytest.approx((1.0, 6.0))
    assert c.second == pytest.approx(3 * math.pi)
    np.testing.assert_allclose(c.quermass_d3(), [1, 2, math.pi, 4 * math.pi / 3])
    assert c.exact_d3(0.1) == pytest.approx(1.6984365698, abs=1e-9)


def test_steiner_validate_d3(unit_cube):
    chk = sm.steiner_validate(unit_cube, [0.05, 0.2, 0.4], 200_000, seed=2)
    assert chk.within(4.0)
    assert chk.fitted is not None


def test_steiner_fit_d4():
    fc = canonical_complexes()["cube4"]
    chk = sm.steiner_validate(fc, [0.2, 0.5, 0.9], 15_000, seed=3)
    assert chk.exact[0] is None
    assert chk.coefficients.surface == pytest.approx(64.0)
    assert chk.within(4.0)


def test_mc_parallel_volume_reproducible(unit_cube):
    a = sm.mc_parallel_volume(unit_cube, 0.1, 10_000, seed=1)
    b = sm.mc_parallel_volume(unit_cube, 0.1, 10_000, seed=1)
    assert a == b


def test_af_check():
    assert sm.af_logconcavity_check([1, 2, math.pi, 4 * math.pi / 3])
    assert not sm.af_logconcavity_check([1, 1, 2])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 5000))
def test_af_on_random_polytopes(seed):
    fc = geo.facets_of_vpolytope(geo.random_simplicial(10, 3, seed))
    assert sm.af_logconcavity_check(sm.steiner_coefficients(fc).quermass_d3())


def test_shadow_counts_bounded():
    base = sm.sphere_base(30, 3, 7)
    inst = sm.sample_instance(base, 0.2, seed=7)
    res = sm.shadow_vertex_experiment(inst, 1000, seed=7)
    assert res.maxCount <= 30 and res.counts.min() >= 0
    assert 3 <= res.mean <= 30


def test_end_to_end_small():
    base = sm.sphere_base(14, 3, 0)
    rep = sm.end_to_end_theorem12(base, 0.1, 0.25, seed=0, trials=1000, planes=200)
    assert rep.sound
    assert len(rep.csv_row()) == len(rep.CSV_COLUMNS)
    assert rep.piMassG >= rep.piMassLimit
    assert math.isfinite(rep.shadowMean)
