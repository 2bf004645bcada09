import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from polyspec import chain, geometry as geo
from polyspec.corpus import canonical_complexes


@pytest.fixture(scope="module")
def cube_model():
    return chain.build_chain(canonical_complexes()["cube"])


def test_cube_chain_quantities(cube_model):
    m = cube_model
    np.testing.assert_allclose(m.pi, 8.0)
    np.testing.assert_allclose(m.chi2, 4 * math.pi)
    np.testing.assert_allclose(m.delta, 8.0)
    assert m.jAvg == pytest.approx(1.0)
    np.testing.assert_allclose(m.Q.sum(axis=1), 0.0, atol=1e-15)
    assert m.stationarity_residual() < 1e-14


def test_cube_chain_gap():
    fc = canonical_complexes()["cube"]
    gap = chain.spectral_gap_of_chain(chain.build_chain(fc), fc=fc)
    np.testing.assert_allclose(gap.eigenvalues, [0, 1, 1, 1, 1.5, 1.5], atol=1e-12)
    assert gap.verdict and gap.gap == pytest.approx(1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 5000), st.sampled_from([(9, 3), (12, 4), (6, 2)]))
def test_stationarity_and_reversibility(seed, md):
    fc = geo.facets_of_vpolytope(geo.random_simplicial(*md, seed))
    m = chain.build_chain(fc)
    assert m.stationarity_residual() <= 1e-9 * np.abs(m.Q).sum(axis=1).max()
    flux = m.pi[:, None] * m.Q
    np.testing.assert_allclose(flux, flux.T, atol=1e-10 * np.abs(flux).max())
    assert m.piBar.sum() == pytest.approx(1.0)
    # chi2/2 <= pi holds facet by facet since tan(x) >= x
    assert np.all(m.chi2 / 2 <= m.pi * (1 + 1e-12))


def test_simulate_matches_batch(cube_model):
    jumps, ends = chain.simulate_batch(cube_model, 0, 2.0, seed=5, trials=20)
    for k in (0, 7, 19):
        tr = chain.simulate(cube_model, 0, 2.0, seed=5, trial=k)
        assert tr.jumps == jumps[k] and tr.facets[-1] == ends[k]
        assert sum(tr.holding) == pytest.approx(2.0)
    # batching does not change a trial
    j2, e2 = chain.simulate_batch(cube_model, 0, 2.0, seed=5, trials=10, first_trial=10)
    np.testing.assert_array_equal(j2, jumps[10:])


def test_trajectory_moves_along_ridges(cube_model):
    fc = canonical_complexes()["cube"]
    tr = chain.simulate(cube_model, 0, 5.0, seed=1)
    for a, b in zip(tr.facets, tr.facets[1:]):
        assert b in fc.adjacency[a]


def test_zero_horizon(cube_model):
    jumps, ends = chain.simulate_batch(cube_model, 3, 0.0, seed=0, trials=5)
    assert not jumps.any() and np.all(ends == 3)
    with pytest.raises(ValueError):
        chain.simulate(cube_model, 0, -1.0, seed=0)


def test_jump_count_poisson(cube_model):
    # every cube facet has total rate 1, so the jump count is Poisson(T)
    jumps, _ = chain.simulate_batch(cube_model, 0, 3.0, seed=2, trials=50_000)
    assert abs(jumps.mean() - 3.0) < 4 * math.sqrt(3.0 / jumps.size)
    assert abs(jumps.var() - 3.0) < 0.1


def test_end_state_frequencies(cube_model):
    f = chain.end_state_frequencies(cube_model, 0, 20.0, seed=3, trials=60_000)
    assert np.abs(f - 1 / 6).max() < 4 * math.sqrt(5 / 36 / 60_000)


def test_reversible_exp_matches_expm():
    fc = geo.facets_of_vpolytope(geo.random_simplicial(10, 3, 2))
    m = chain.build_chain(fc)
    P = np.eye(m.N)[:3]
    for t in (0.01, 0.5, 4.0):
        np.testing.assert_allclose(chain.reversible_exp(m, P, t), P @ expm(t * m.Q), atol=1e-10)


def test_mixing(cube_model):
    p = np.zeros(6)
    p[0] = 1
    res = chain.mixing_check(cube_model, p, 1e-3)
    assert res.warmness == pytest.approx(6.0)
    assert res.t == pytest.approx(2 * math.log(6000))
    assert res.ok and res.tv < 1e-6
    same = chain.point_mass_mixing(cube_model, 1e-3)[0]
    assert same.tv == pytest.approx(res.tv, abs=1e-12)
    assert chain.mixing_check(cube_model, cube_model.piBar, 1e-3).t == 0.0


def test_giant_component_cube():
    fc = canonical_complexes()["cube"]
    gc = chain.giant_component(fc, 0.5, 2000, seed=0)
    assert gc.G == tuple(range(6))
    assert gc.piMass == pytest.approx(1.0)
    assert gc.bfsDiameterOfG == 2 <= gc.certifiedDiameterBound
    assert gc.jumps.size == 2000


def test_giant_component_mass_on_random_polytope():
    fc = geo.facets_of_vpolytope(geo.random_simplicial(16, 3, 9))
    gc = chain.giant_component(fc, 0.25, 3000, seed=1)
    assert gc.piMass >= chain.mass_lower_limit(0.25, 3000)
    assert gc.bfsDiameterOfG <= 2 * gc.pathLengthCutoff


def test_giant_component_arguments():
    fc = canonical_complexes()["cube"]
    with pytest.raises(ValueError):
        chain.giant_component(fc, 1.5, 100, seed=0)
    with pytest.raises(ValueError):
        chain.giant_component(fc, 0.5, 0, seed=0)
    with pytest.raises(chain.EmptyGiantComponentError):
        chain.giant_component(fc, 0.5, 10, seed=0, threshold=1e-9, horizon=50.0)


def test_choose_source_prefers_low_jump_facets():
    fc = geo.facets_of_vpolytope(geo.random_simplicial(14, 3, 4))
    m = chain.build_chain(fc)
    F0, means, _ = chain.choose_source(m, 2.0, seed=0, trials_per_facet=400)
    ok = np.nonzero(means <= 2.0 * m.jAvg)[0]
    # the pi-weighted average of the true means is exactly T J_avg
    assert ok.size and F0 == ok[0]
    assert m.piBar @ means == pytest.approx(2.0 * m.jAvg, rel=0.05)


def test_mass_lower_limit():
    assert chain.mass_lower_limit(0.25, 10_000) == pytest.approx(0.75 - 3 * math.sqrt(0.75 * 0.25 / 10_000))


def test_nondegeneracy_report():
    fc = canonical_complexes()["cube"]
    rep = chain.nondegeneracy_report(fc, r=1.0)
    assert rep.piMinActual == pytest.approx(1 / 6)
    assert rep.surfaceRatio == pytest.approx(48 / 24)
    np.testing.assert_allclose(rep.chi2PiRatios, math.pi / 2)
    assert rep.regimeHolds and rep.chi2HalfLePi
    assert rep.logPiMinBound == pytest.approx(-18 * math.log(8) - 3 * math.log(3))
    tight = chain.nondegeneracy_report(fc, r=10.0)
    assert not tight.regimeHolds and len(tight.flaggedFacets) == 6
