import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyspec import geometry as geo, spectral
from polyspec.corpus import canonical_complexes


@pytest.fixture(scope="module")
def cube():
    return canonical_complexes()["cube"]


def test_cube_matrices(cube):
    b = spectral.build_bundle(cube)
    H = np.asarray(b.H)
    # opposite facets are not adjacent; every other pair shares an edge of length 2
    for i in range(6):
        row = sorted(H[i])
        assert row == pytest.approx([0, 0, 2, 2, 2, 2])
    np.testing.assert_allclose(b.D, 8.0)
    np.testing.assert_allclose(np.linalg.eigvalsh(np.asarray(b.L)), [0, 8, 8, 8, 12, 12], atol=1e-12)
    np.testing.assert_allclose(b.spectrumScaled.eigenvalues, [-0.5, -0.5, 0, 0, 0, 1], atol=1e-12)
    assert b.identity_residual() < 1e-12


def test_tetrahedron_entries():
    fc = canonical_complexes()["simplex"]
    H = np.asarray(spectral.build_hessian(fc))
    theta = math.pi - math.acos(1 / 3)
    off = H[~np.eye(4, dtype=bool)]
    np.testing.assert_allclose(off, 1 / math.sin(theta))
    np.testing.assert_allclose(np.diag(H), -3 / math.tan(theta))
    np.testing.assert_allclose(spectral.build_degree(fc), 3 * math.tan(theta / 2))


@pytest.mark.parametrize("name", ["cube", "cross", "simplex", "square", "cube4"])
def test_euler_and_translation_identities(name):
    """Facet volumes are (d-1)-homogeneous and translation invariant in the
    support numbers, so H h = (d-1)|F| and H u = 0."""
    fc = canonical_complexes()[name]
    H = np.asarray(spectral.build_hessian(fc))
    np.testing.assert_allclose(H @ fc.offsets(), (fc.dim - 1) * fc.facet_volumes(), atol=1e-10)
    np.testing.assert_allclose(H @ fc.normals(), 0.0, atol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 5000), st.sampled_from([(8, 3), (14, 3), (10, 4), (7, 2)]))
def test_identities_on_random_polytopes(seed, md):
    fc = geo.facets_of_vpolytope(geo.random_simplicial(*md, seed))
    b = spectral.build_bundle(fc)
    H = np.asarray(b.H)
    np.testing.assert_allclose(H @ fc.offsets(), (fc.dim - 1) * fc.facet_volumes(), rtol=1e-9, atol=1e-10)
    assert b.identity_residual() < 1e-10
    np.testing.assert_allclose(np.asarray(b.L).sum(axis=1), 0.0, atol=1e-10)
    cert = spectral.certify_gap(b)
    assert cert.verdict and cert.positiveCount == 1


def test_positive_count_matches_h_inertia():
    fc = geo.facets_of_vpolytope(geo.random_simplicial(12, 3, 3))
    b = spectral.build_bundle(fc)
    evH = b.spectrumH.eigenvalues
    assert int((evH > 1e-8 * b.H.norm_inf()).sum()) == spectral.certify_gap(b).positiveCount == 1


def test_certificate_fields(cube):
    c = spectral.certify_gap(cube)
    assert c.status == "pass"
    assert c.topEigenvalue == pytest.approx(1.0)
    assert c.secondEigenvalue == pytest.approx(0.0, abs=1e-12)
    assert c.topVectorResidual < 1e-12


def test_hessian_requires_interior_origin():
    K = geo.cube(3).translated([1.0, 0, 0])
    fc = geo.facets_of_vpolytope(K, allow_nonsimplicial=True)
    with pytest.raises(geo.OriginNotInteriorError):
        spectral.build_hessian(fc)


def test_tilde_hessian_cube_square():
    assert spectral.tilde_hessian_check(geo.cube_h(3)).topEigenvalue == pytest.approx(2.0, abs=1e-10)
    assert spectral.tilde_hessian_check(geo.cube_h(2)).topEigenvalue == pytest.approx(1.0, abs=1e-10)


def test_tilde_hessian_skips_non_simple():
    res = spectral.tilde_hessian_check(geo.cross_polytope_h(3))
    assert res.status == "skipped-non-simple" and res.topEigenvalue is None


def test_tilde_hessian_top_vector():
    P = geo.polar(geo.random_simplicial(10, 3, 8))
    fc = geo.facets_of_hpolytope(P)
    Ht = spectral.tilde_hessian(P, fc)
    # R^{1/2} H R^{1/2} (R^{-1/2} c) = R^{1/2} H c = (d-1) R^{1/2} |F| = (d-1) R^{-1/2} c
    c = fc.offsets()
    r = np.sqrt(c / fc.facet_volumes())
    np.testing.assert_allclose(Ht @ (c / r), 2.0 * c / r, rtol=1e-9)


def _pyramid():
    A = [[0, 0, -1], [1, 0, 1], [-1, 0, 1], [0, 1, 1], [0, -1, 1]]
    return geo.HPolytope(A, [1, 1, 1, 1, 1])


def test_probe_on_pyramid():
    P = _pyramid()
    assert not geo.is_simple(P)
    res = spectral.perturbation_continuity_probe(P, trials=10, seed=0)
    assert all(f == 1.0 for f in res.simpleFraction)
    assert res.monotone


def test_probe_rejects_redundant_rows():
    P = geo.HPolytope(np.vstack([geo.cube_h(3).A, [[1, 0, 0]]]), np.r_[geo.cube_h(3).b, 3.0])
    assert spectral.redundant_constraints(P) == [6]
    with pytest.raises(spectral.NonMinimalSystemError):
        spectral.perturbation_continuity_probe(P)


def test_report_keys(cube):
    rep = spectral.report(cube)
    assert rep["N"] == 6 and rep["gapCertificate"] == "pass"
    assert rep["eigenvaluesScaled"][-1] == pytest.approx(1.0)
    assert len(rep["eigenvaluesH"]) == 6
