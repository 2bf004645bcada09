import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import ConvexHull

from polyspec import geometry as geo


def test_tetrahedron_complex():
    fc = geo.facets_of_vpolytope(geo.regular_simplex(3))
    assert (fc.N, len(fc.ridges)) == (4, 6)
    np.testing.assert_allclose(fc.facet_volumes(), math.sqrt(3) / 4)
    ang = fc.ridge_arrays()[3]
    np.testing.assert_allclose(ang, math.pi - math.acos(1 / 3))
    assert fc.simplicial and fc.is_connected()


def test_octahedron_complex():
    fc = geo.facets_of_vpolytope(geo.cross_polytope(3))
    assert (fc.N, len(fc.ridges)) == (8, 12)
    np.testing.assert_allclose(fc.ridge_arrays()[3], math.acos(1 / 3))
    np.testing.assert_allclose(fc.ridge_arrays()[2], math.sqrt(2))


def test_cube_merged_path():
    fc = geo.facets_of_vpolytope(geo.cube(3), allow_nonsimplicial=True)
    assert fc.N == 6 and len(fc.ridges) == 12 and not fc.simplicial
    np.testing.assert_allclose(fc.facet_volumes(), 4.0)
    assert geo.codim2_perimeter(fc) == pytest.approx(24.0)
    assert geo.volume(fc) == pytest.approx(8.0)
    assert geo.surface_area(fc) == pytest.approx(24.0)
    assert geo.mean_curvature_sum(fc) == pytest.approx(24 * math.pi / 2)


def test_cube_rejected_on_simplicial_path():
    with pytest.raises(geo.NearDegeneracyError):
        geo.facets_of_vpolytope(geo.cube(3))


@pytest.mark.parametrize("m,d,seed", [(8, 3, 0), (15, 3, 1), (12, 4, 2), (9, 2, 3), (10, 5, 4)])
def test_random_polytope_against_qhull(m, d, seed):
    K = geo.random_simplicial(m, d, seed)
    fc = geo.facets_of_vpolytope(K)
    hull = ConvexHull(K.points)
    assert fc.N == len(hull.simplices)
    assert geo.volume(fc) == pytest.approx(hull.volume, rel=1e-10)
    assert geo.surface_area(fc) == pytest.approx(hull.area, rel=1e-10)
    assert fc.vertex_indices() == sorted(hull.vertices.tolist())
    # every facet has exactly d neighbours in a simplicial polytope
    assert all(len(v) == d for v in fc.adjacency.values())


def test_interior_points_are_dropped():
    pts = np.vstack([geo.cross_polytope(3).points, [[0.1, 0.1, 0.1], [0, 0, 0]]])
    fc = geo.facets_of_vpolytope(geo.VPolytope(pts))
    assert fc.N == 8 and fc.vertex_indices() == list(range(6))


def test_degenerate_inputs():
    with pytest.raises(geo.DegeneratePolytopeError):
        geo.VPolytope([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]])
    with pytest.raises(geo.DegeneratePolytopeError):
        geo.VPolytope([[0, 0], [1, 0]])
    with pytest.raises(geo.GeometryError):
        geo.HPolytope([[0, 0], [1, 0]], [1, 1])


def test_dihedral_angle():
    assert geo.dihedral_angle([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)
    with pytest.raises(geo.DegenerateAngleError):
        geo.dihedral_angle([1, 0, 0], [1, 0, 0])


def test_hull_volume():
    assert geo.hull_volume(geo.cube(3).points) == pytest.approx(8.0)
    assert geo.hull_volume(geo.cube(2, half=0.5).points) == pytest.approx(1.0)


def test_hpolytope_vertices_and_facets():
    V, inc = geo.vertices_of_hpolytope(geo.cube_h(3))
    assert V.m == 8 and all(len(x) == 3 for x in inc)
    fc = geo.facets_of_hpolytope(geo.cube_h(3))
    assert sorted(f.label for f in fc.facets) == list(range(6))
    np.testing.assert_allclose(fc.facet_volumes(), 4.0)
    assert geo.is_simple(geo.cube_h(3))
    assert not geo.is_simple(geo.cross_polytope_h(3))


def test_vertex_graph_diameter():
    assert geo.vertex_graph_diameter(geo.cube_h(3)) == 3
    assert geo.vertex_graph_diameter(geo.cube_h(4)) == 4
    assert geo.vertex_graph_diameter(geo.standard_simplex_h(3)) == 1


def test_boundedness_and_emptiness():
    assert geo.cube_h(3).is_bounded()
    assert not geo.HPolytope([[1.0, 0], [0, 1]], [1, 1]).is_bounded()
    with pytest.raises(geo.EmptyPolytopeError):
        geo.HPolytope([[1.0], [-1.0]], [-1, -1]).is_bounded()


def test_polar_roundtrip():
    cube = geo.cube_h(3)
    octa = geo.polar(cube)
    assert octa.m == 6
    back = geo.polar(octa)
    np.testing.assert_allclose(np.sort(back.A, axis=0), np.sort(cube.A, axis=0))
    with pytest.raises(geo.OriginNotInteriorError):
        geo.polar(geo.cube(3).translated([2, 0, 0]))


def test_origin_interior_lp():
    assert geo.origin_interior(geo.cube(3))
    assert not geo.origin_interior(geo.cube(3).translated([1, 0, 0]))


def test_inradius_and_recenter():
    r, c = geo.inradius(geo.cube_h(3))
    assert r == pytest.approx(1.0)
    square = geo.VPolytope([[0, 0], [1, 0], [0, 1], [1, 1]])
    r, c = geo.inradius(square)
    assert r == pytest.approx(0.5)
    np.testing.assert_allclose(c, [0.5, 0.5], atol=1e-9)
    moved, center = geo.recenter(square)
    assert geo.origin_interior(moved)
    r_simplex, _ = geo.inradius(geo.regular_simplex(3))
    assert r_simplex == pytest.approx(1 / math.sqrt(24))


def test_containment():
    ok, margin = geo.containment_check(geo.cube(3, half=0.5), geo.cube_h(3))
    assert ok and margin == pytest.approx(-0.5)
    ok, margin = geo.containment_check(geo.cube(3, half=1.5), geo.cube(3))
    assert not ok and margin == pytest.approx(0.5)
    ok, _ = geo.containment_check(geo.cross_polytope(3), geo.cube(3))
    assert ok


def test_integer_data():
    I = geo.integer_data([[2, 0], [0, 3], [-1, 0], [0, -1]], [1, 1, 1, 1])
    assert I.Delta == 6 and I.normA == 3 and I.normB == 1 and I.Delta_dm1 == 3
    cube = geo.cube_h(3)
    I = geo.integer_data(cube.A.astype(int), cube.b.astype(int))
    # the (e1, -e1, e2) x (x1, x2, b) minor is 2
    assert (I.Delta, I.normA, I.normB, I.Delta_dm1) == (2, 1, 1, 1)


def test_integer_data_matches_float_brute_force():
    P = geo.random_integral_hpolytope(3, 5)
    Ab = np.hstack([P.A, P.b[:, None]])
    import itertools
    best = max(abs(round(np.linalg.det(Ab[np.ix_(r, c)])))
               for r in itertools.combinations(range(P.m), 3)
               for c in itertools.combinations(range(4), 3))
    assert geo.integer_data(P.A.astype(int), P.b.astype(int)).Delta == best


def test_random_integral_hpolytope():
    P = geo.random_integral_hpolytope(3, 1)
    assert P.is_bounded() and np.abs(P.A).max() <= 5 and P.b.min() >= 1


def test_json_roundtrip(tmp_path):
    for X in (geo.cube(3), geo.cube_h(2)):
        path = tmp_path / "p.json"
        geo.save_polytope(X, path)
        Y = geo.load_polytope(path)
        assert type(Y) is type(X)
        assert geo.polytope_to_dict(Y) == geo.polytope_to_dict(X)


@pytest.mark.parametrize("obj,field", [
    ({"kind": "V", "dim": 2, "pointz": [[0, 0]]}, "pointz"),
    ({"kind": "Q", "dim": 2}, "kind"),
    ({"kind": "V", "dim": 0, "points": []}, "dim"),
    ({"kind": "V", "dim": 2, "points": [[0, 0, 0]]}, "points"),
    ({"kind": "H", "dim": 1, "A": [[1], [-1]], "b": [1]}, "b"),
])
def test_json_errors_name_the_field(obj, field):
    with pytest.raises(geo.PolytopeFormatError) as exc:
        geo.polytope_from_dict(obj)
    assert exc.value.field == field


def test_malformed_json_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(geo.PolytopeFormatError, match="line 1"):
        geo.load_polytope(path)


def test_generate():
    assert isinstance(geo.generate("cube:d=4"), geo.VPolytope)
    assert geo.generate("sphere:m=12,d=3,seed=2").m == 12
    with pytest.raises(geo.PolytopeFormatError):
        geo.generate("dodecahedron")
    with pytest.raises(geo.PolytopeFormatError):
        geo.generate("cube:d")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.2, 5.0))
def test_scaling_homogeneity(seed, t):
    K = geo.random_simplicial(10, 3, seed)
    fc = geo.facets_of_vpolytope(K)
    fs = geo.facets_of_vpolytope(K.scaled(t))
    assert geo.volume(fs) == pytest.approx(t**3 * geo.volume(fc), rel=1e-9)
    assert geo.surface_area(fs) == pytest.approx(t**2 * geo.surface_area(fc), rel=1e-9)
    np.testing.assert_allclose(fs.ridge_arrays()[3], fc.ridge_arrays()[3], atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_polar_involution(seed):
    K = geo.random_simplicial(9, 3, seed)
    P = geo.polar(K)
    Kb = geo.polar(P)
    np.testing.assert_allclose(Kb.points, K.points)
    # polar facets correspond to vertices of P: counts agree
    V, _ = geo.vertices_of_hpolytope(P)
    assert V.m == geo.facets_of_vpolytope(K).N
