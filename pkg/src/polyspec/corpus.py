"""Seeded instance collections shared by the test-suite and the CLI sweeps."""
from __future__ import annotations

from .geometry import (
    FacetComplex,
    HPolytope,
    cross_polytope,
    cube,
    facets_of_vpolytope,
    random_integral_hpolytope,
    random_simplicial,
    regular_simplex,
)
from .smoothed import facet_complex_any


def simplicial_params(k: int) -> tuple[int, int]:
    """(m, d) for the k-th random simplicial instance: d in 2..5, m <= 20."""
    d = 2 + k % 4
    return min(20, d + 2 + (7 * k) % (19 - d)), d


def simplicial_corpus(count: int = 100, seed: int = 0) -> list[FacetComplex]:
    out = []
    for k in range(count):
        m, d = simplicial_params(k)
        out.append(facets_of_vpolytope(random_simplicial(m, d, seed + k)))
    return out


def canonical_complexes() -> dict[str, FacetComplex]:
    return {
        "cube": facets_of_vpolytope(cube(3), allow_nonsimplicial=True),
        "cross": facets_of_vpolytope(cross_polytope(3)),
        "simplex": facets_of_vpolytope(regular_simplex(3)),
        "square": facets_of_vpolytope(cube(2), allow_nonsimplicial=True),
        "cube4": facets_of_vpolytope(cube(4), allow_nonsimplicial=True),
    }


def integral_corpus(count: int = 100, seed: int = 0) -> list[HPolytope]:
    """Bounded integral polytopes, d cycling through 2, 3, 4, entries in [-5, 5]."""
    return [random_integral_hpolytope(2 + k % 3, seed + k) for k in range(count)]


def d3_corpus(count: int = 20, seed: int = 0) -> list[FacetComplex]:
    out = [canonical_complexes()[k] for k in ("cube", "cross", "simplex")]
    for k in range(count):
        out.append(facet_complex_any(random_simplicial(6 + k % 15, 3, seed + 1000 + k)))
    return out
