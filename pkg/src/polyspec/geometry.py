"""Polytopes in V- and H-representation and their facet complexes.

Facet enumeration is brute force over d-subsets of points (vectorised side
tests), which is adequate for the desk-scale instances used here and keeps
the toolkit free of a convex-hull dependency.  Two paths exist:

* simplicial: every facet has exactly d vertices; a point within tolerance
  of a candidate hyperplane aborts with :class:`NearDegeneracyError`;
* merged: coplanar candidates are merged, and facet / ridge volumes are
  computed by a fan decomposition from the lowest-index vertex.
"""
from __future__ import annotations

import itertools
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .config import TOL
from .linalg import LinearProgram, gram_volume, solve_lp
from .rng import Stream


class GeometryError(ValueError):
    pass


class DegeneratePolytopeError(GeometryError):
    """Input is not full-dimensional (or otherwise unusable)."""


class NearDegeneracyError(GeometryError):
    def __init__(self, subset, distance):
        super().__init__(
            f"point within tolerance of the hyperplane through {tuple(int(i) for i in subset)} "
            f"(distance {distance:.3e}); retry with allow_nonsimplicial=True"
        )
        self.subset = tuple(int(i) for i in subset)


class DegenerateAngleError(GeometryError):
    pass


class UnboundedPolytopeError(GeometryError):
    pass


class EmptyPolytopeError(GeometryError):
    pass


class OriginNotInteriorError(GeometryError):
    def __init__(self, what: str = "polytope"):
        super().__init__(
            f"origin is not interior to the {what}; recenter first (e.g. recenter(K), "
            "which moves the Chebyshev center to the origin)"
        )


# ------------------------------------------------------------------ types


def _affine_rank(points: np.ndarray, rtol: float = 1e-10) -> int:
    if len(points) <= 1:
        return 0
    diff = points[1:] - points[0]
    sv = np.linalg.svd(diff, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int((sv > rtol * max(1.0, sv[0])).sum())


@dataclass(frozen=True)
class VPolytope:
    points: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2:
            raise DegeneratePolytopeError("points must be a 2-d array")
        m, d = pts.shape
        if m < d + 1:
            raise DegeneratePolytopeError(f"need at least d+1 = {d + 1} points, got {m}")
        if _affine_rank(pts) < d:
            raise DegeneratePolytopeError("points do not span a full-dimensional polytope")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def m(self) -> int:
        return self.points.shape[0]

    def scaled(self, t: float) -> "VPolytope":
        return VPolytope(self.points * t, self.labels)

    def translated(self, v) -> "VPolytope":
        return VPolytope(self.points + np.asarray(v, dtype=float), self.labels)


@dataclass(frozen=True)
class HPolytope:
    A: np.ndarray
    b: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        if A.ndim != 2 or A.shape[0] != b.size:
            raise GeometryError("A must be m x d with len(b) == m")
        if np.any(np.linalg.norm(A, axis=1) == 0.0):
            raise GeometryError("constraint rows must be nonzero")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def contains(self, x, tol: float = TOL.absolute) -> bool:
        return bool(np.all(self.A @ np.asarray(x, dtype=float) <= self.b + tol))

    def is_bounded(self) -> bool:
        """Certify boundedness by maximising +-x_i (2d LPs)."""
        d = self.dim
        for i in range(d):
            for sgn in (1.0, -1.0):
                c = np.zeros(d)
                c[i] = sgn
                res = solve_lp(LinearProgram(self.A, self.b, c))
                if res.status == "unbounded":
                    return False
                if res.status == "infeasible":
                    raise EmptyPolytopeError("H-polytope is empty")
        return True

    def with_rhs(self, b) -> "HPolytope":
        return HPolytope(self.A, b, self.labels)

    def normalized(self) -> "HPolytope":
        n = np.linalg.norm(self.A, axis=1)
        return HPolytope(self.A / n[:, None], self.b / n, self.labels)


@dataclass(frozen=True)
class Facet:
    vertices: tuple  # indices into FacetComplex.points
    normal: np.ndarray  # outward unit normal
    offset: float  # normal . x on the facet
    volume: float  # (d-1)-volume
    label: Optional[int] = None  # constraint index when built from an H-polytope


@dataclass(frozen=True)
class Ridge:
    pair: tuple  # (i, j) facet indices, i < j
    vertices: tuple
    volume: float  # (d-2)-volume
    angle: float  # angle between the outward normals, in (0, pi)


@dataclass(frozen=True)
class FacetComplex:
    dim: int
    points: np.ndarray
    facets: tuple
    ridges: tuple
    simplicial: bool
    adjacency: dict = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.adjacency is None:
            adj = {i: [] for i in range(len(self.facets))}
            for r in self.ridges:
                i, j = r.pair
                adj[i].append(j)
                adj[j].append(i)
            object.__setattr__(self, "adjacency", {k: tuple(sorted(v)) for k, v in adj.items()})

    @property
    def N(self) -> int:
        return len(self.facets)

    def ridge_volume_matrix(self) -> np.ndarray:
        F = np.zeros((self.N, self.N))
        for r in self.ridges:
            i, j = r.pair
            F[i, j] = F[j, i] = r.volume
        return F

    def angle_matrix(self) -> np.ndarray:
        """Normal angles on adjacent pairs, NaN elsewhere."""
        T = np.full((self.N, self.N), np.nan)
        for r in self.ridges:
            i, j = r.pair
            T[i, j] = T[j, i] = r.angle
        return T

    def ridge_arrays(self):
        """(i, j, |F_ij|, theta_ij) as parallel arrays over ridges."""
        if not self.ridges:
            z = np.zeros(0)
            return z.astype(int), z.astype(int), z, z
        i = np.array([r.pair[0] for r in self.ridges])
        j = np.array([r.pair[1] for r in self.ridges])
        vol = np.array([r.volume for r in self.ridges])
        ang = np.array([r.angle for r in self.ridges])
        return i, j, vol, ang

    def facet_volumes(self) -> np.ndarray:
        return np.array([f.volume for f in self.facets])

    def normals(self) -> np.ndarray:
        return np.array([f.normal for f in self.facets])

    def offsets(self) -> np.ndarray:
        return np.array([f.offset for f in self.facets])

    def vertex_indices(self) -> list[int]:
        return sorted({v for f in self.facets for v in f.vertices})

    def is_connected(self) -> bool:
        if self.N == 0:
            return False
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for w in self.adjacency[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return len(seen) == self.N

    def origin_interior(self, tol: float = TOL.absolute) -> bool:
        return bool(np.all(self.offsets() > tol))


@dataclass(frozen=True)
class IntegerData:
    Delta: int
    normA: int
    normB: int
    Delta_dm1: int


# ------------------------------------------------------------------ hyperplane machinery


def _subset_normals(X: np.ndarray, subsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalised normals of hyperplanes through each d-subset (cofactor expansion)."""
    d = X.shape[1]
    base = X[subsets[:, 0]]
    E = X[subsets[:, 1:]] - base[:, None, :]
    normals = np.empty((len(subsets), d))
    if d == 1:
        normals[:, 0] = 1.0
        return normals, base
    cols = np.arange(d)
    for k in range(d):
        minor = E[:, :, cols != k]
        normals[:, k] = (-1) ** k * np.linalg.det(minor)
    return normals, base


def _supporting_hyperplanes(X: np.ndarray, tol: float, simplicial: bool, chunk: int = 20000):
    """Facets of conv(X) for full-dimensional X in R^k.

    Returns a list of (on_set, outward unit normal, offset), where on_set is
    the sorted tuple of point indices on the facet's hyperplane.
    """
    m, k = X.shape
    scale = max(1.0, float(np.linalg.norm(X, axis=1).max()))
    side_tol = tol * scale
    found: dict[tuple, tuple] = {}
    combos = itertools.combinations(range(m), k)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.intp)
        if block.size == 0:
            break
        block = block.reshape(-1, k)
        normals, base = _subset_normals(X, block)
        norms = np.linalg.norm(normals, axis=1)
        spread = np.linalg.norm(X[block] - base[:, None, :], axis=2).max(axis=1) if k > 1 else np.ones(len(block))
        good = norms > 1e-10 * np.maximum(spread, 1e-300) ** (k - 1)
        if not good.any():
            continue
        block, normals, base, norms = block[good], normals[good], base[good], norms[good]
        normals = normals / norms[:, None]
        offsets = np.einsum("ij,ij->i", normals, base)
        sides = X @ normals.T - offsets  # (m, n_block)
        pos = (sides > side_tol).any(axis=0)
        neg = (sides < -side_tol).any(axis=0)
        support = ~(pos & neg)
        for c in np.nonzero(support)[0]:
            col = sides[:, c]
            on = np.nonzero(np.abs(col) <= side_tol)[0]
            if not pos[c] and not neg[c]:
                raise DegeneratePolytopeError("all points lie on one hyperplane")
            n, off = normals[c], offsets[c]
            if pos[c]:
                n, off = -n, -off
            if simplicial and len(on) > k:
                extra = [i for i in on if i not in set(block[c])]
                dist = float(np.abs(col[extra]).max()) if extra else 0.0
                raise NearDegeneracyError(block[c], dist)
            key = tuple(int(i) for i in on)
            if key not in found:
                found[key] = (n.copy(), float(off))
    return [(key, n, off) for key, (n, off) in sorted(found.items())]


def affine_frame(points: np.ndarray):
    """(origin, orthonormal rows spanning the affine hull, coordinates)."""
    p0 = points[0]
    diff = points - p0
    if len(points) == 1:
        return p0, np.zeros((0, points.shape[1])), np.zeros((1, 0))
    _, sv, vt = np.linalg.svd(diff, full_matrices=False)
    r = int((sv > 1e-10 * max(1.0, sv[0])).sum()) if sv.size else 0
    basis = vt[:r]
    return p0, basis, diff @ basis.T


def hull_volume(points, tol: float = TOL.side) -> float:
    """Volume of conv(points) measured in its own affine hull.

    The polytope is decomposed into pyramids from its lowest-index point over
    the facets not containing it; facets are handled recursively.
    """
    pts = np.asarray(points, dtype=float)
    _, _, Y = affine_frame(pts)
    return _full_hull_volume(Y, tol)


def _full_hull_volume(Y: np.ndarray, tol: float) -> float:
    n, k = Y.shape
    if k == 0:
        return 1.0
    if k == 1:
        return float(Y[:, 0].max() - Y[:, 0].min())
    if n == k + 1:
        return gram_volume(Y)
    total = 0.0
    p0 = Y[0]
    for on, normal, off in _supporting_hyperplanes(Y, tol, simplicial=False):
        if 0 in on:
            continue
        h = off - float(normal @ p0)
        if h <= 0.0:
            continue
        sub = Y[list(on)]
        _, _, Z = affine_frame(sub)
        total += h * _full_hull_volume(Z, tol) / k
    return total


def dihedral_angle(u_s, u_t, tol: float = 1e-12) -> float:
    u_s = np.asarray(u_s, dtype=float)
    u_t = np.asarray(u_t, dtype=float)
    c = float(np.clip(u_s @ u_t, -1.0, 1.0))
    if abs(c) >= 1.0 - tol:
        raise DegenerateAngleError("parallel facet normals: parallel facets of a convex polytope cannot share a ridge")
    return math.acos(c)


# ------------------------------------------------------------------ facet complexes


def _check_complex(fc: FacetComplex) -> FacetComplex:
    if any(f.volume <= 0.0 for f in fc.facets):
        raise DegeneratePolytopeError("facet with zero volume")
    if any(r.volume <= 0.0 for r in fc.ridges):
        raise DegeneratePolytopeError("ridge with zero volume")
    if not fc.is_connected():
        raise GeometryError("facet graph is disconnected (enumeration bug)")
    return fc


def facets_of_vpolytope(K: VPolytope, allow_nonsimplicial: bool = False,
                        tol: float = TOL.side) -> FacetComplex:
    X = K.points
    d = K.dim
    hyper = _supporting_hyperplanes(X, tol, simplicial=not allow_nonsimplicial)
    simplicial = all(len(on) == d for on, _, _ in hyper)
    facets = []
    for on, n, off in hyper:
        vol = gram_volume(X[list(on)]) if len(on) == d else hull_volume(X[list(on)], tol)
        facets.append(Facet(on, n, off, vol))
    ridges = []
    if simplicial:
        owners: dict[tuple, list[int]] = {}
        for fi, f in enumerate(facets):
            for sub in itertools.combinations(f.vertices, d - 1):
                owners.setdefault(sub, []).append(fi)
        for sub, fs in sorted(owners.items()):
            if len(fs) != 2:
                raise GeometryError(f"ridge {sub} belongs to {len(fs)} facets")
            i, j = fs
            ang = dihedral_angle(facets[i].normal, facets[j].normal)
            ridges.append(Ridge((i, j), sub, gram_volume(X[list(sub)]), ang))
    else:
        sets = [set(f.vertices) for f in facets]
        for i, j in itertools.combinations(range(len(facets)), 2):
            shared = sorted(sets[i] & sets[j])
            if len(shared) < d - 1:
                continue
            if _affine_rank(X[shared]) != d - 2:
                continue
            ang = dihedral_angle(facets[i].normal, facets[j].normal)
            vol = hull_volume(X[shared], tol)
            ridges.append(Ridge((i, j), tuple(shared), vol, ang))
    ridges.sort(key=lambda r: r.pair)
    return _check_complex(FacetComplex(d, X, tuple(facets), tuple(ridges), simplicial))


def vertices_of_hpolytope(P: HPolytope, tol: float = TOL.absolute):
    """Brute-force vertex enumeration.

    Returns ``(VPolytope, incidence)`` where ``incidence[k]`` is the sorted
    tuple of constraints tight at vertex ``k``.
    """
    if not P.is_bounded():
        raise UnboundedPolytopeError("H-polytope is unbounded")
    A, b = P.A, P.b
    m, d = A.shape
    scale = max(1.0, float(np.abs(b).max()))
    subsets = np.array(list(itertools.combinations(range(m), d)), dtype=np.intp)
    As = A[subsets]
    bs = b[subsets]
    dets = np.linalg.det(As)
    row_scale = np.prod(np.linalg.norm(As, axis=2), axis=1)
    ok = np.abs(dets) > 1e-12 * row_scale
    xs = np.linalg.solve(As[ok], bs[ok][..., None])[..., 0]
    feas = (xs @ A.T <= b + tol * scale).all(axis=1)
    xs = xs[feas]
    verts: list[np.ndarray] = []
    for x in xs:
        if not any(np.abs(x - v).max() <= 1e-9 * scale for v in verts):
            verts.append(x)
    verts.sort(key=lambda v: tuple(np.round(v, 9)))
    V = np.array(verts)
    slack = np.abs(V @ A.T - b)
    incidence = [tuple(int(i) for i in np.nonzero(row <= tol * scale)[0]) for row in slack]
    return VPolytope(V), incidence


def facets_of_hpolytope(P: HPolytope, tol: float = TOL.absolute) -> FacetComplex:
    """Facet complex of an H-polytope; facet ``label`` is its constraint index.

    Constraints that do not define a facet (redundant rows) are dropped.
    """
    K, incidence = vertices_of_hpolytope(P, tol)
    V = K.points
    d = P.dim
    Pn = P.normalized()
    tight = [set() for _ in range(P.m)]
    for vi, inc in enumerate(incidence):
        for c in inc:
            tight[c].add(vi)
    facets = []
    seen_sets: dict[tuple, int] = {}
    for c in range(P.m):
        vs = tuple(sorted(tight[c]))
        if len(vs) < d or _affine_rank(V[list(vs)]) != d - 1:
            continue
        if vs in seen_sets:
            continue  # duplicate constraint
        seen_sets[vs] = c
        vol = hull_volume(V[list(vs)])
        facets.append(Facet(vs, Pn.A[c].copy(), float(Pn.b[c]), vol, label=c))
    ridges = []
    for i, j in itertools.combinations(range(len(facets)), 2):
        shared = sorted(set(facets[i].vertices) & set(facets[j].vertices))
        if len(shared) < d - 1 or _affine_rank(V[shared]) != d - 2:
            continue
        ang = dihedral_angle(facets[i].normal, facets[j].normal)
        ridges.append(Ridge((i, j), tuple(shared), hull_volume(V[shared]), ang))
    simplicial = all(len(f.vertices) == d for f in facets)
    return _check_complex(FacetComplex(d, V, tuple(facets), tuple(ridges), simplicial))


def is_simple(P: HPolytope, tol: float = TOL.absolute) -> bool:
    _, incidence = vertices_of_hpolytope(P, tol)
    return all(len(inc) == P.dim for inc in incidence)


def vertex_graph_diameter(P: HPolytope) -> int:
    """Exact vertex diameter from the vertex-edge graph of P.

    Two vertices are adjacent when their common tight constraints have rank d-1.
    """
    K, inc = vertices_of_hpolytope(P)
    n = K.m
    d = P.dim
    adj = {i: [] for i in range(n)}
    for u, v in itertools.combinations(range(n), 2):
        common = sorted(set(inc[u]) & set(inc[v]))
        if len(common) >= d - 1 and np.linalg.matrix_rank(P.A[common]) == d - 1:
            adj[u].append(v)
            adj[v].append(u)
    return _graph_diameter(adj)


def _graph_diameter(adj: dict) -> int:
    best = 0
    nodes = list(adj)
    for s in nodes:
        dist = {s: 0}
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        if len(dist) != len(nodes):
            raise GeometryError("graph is disconnected")
        best = max(best, max(dist.values()))
    return best


# ------------------------------------------------------------------ polarity, LP-based checks


def origin_interior(K: Union[VPolytope, HPolytope], tol: float = TOL.absolute) -> bool:
    if isinstance(K, HPolytope):
        return bool(np.all(K.b > tol))
    m, d = K.points.shape
    # max t s.t. lambda_i >= t, sum lambda = 1, sum lambda_i v_i = 0
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A = np.hstack([-np.eye(m), np.ones((m, 1))])
    A_eq = np.vstack([np.hstack([K.points.T, np.zeros((d, 1))]), np.hstack([np.ones((1, m)), [[0.0]]])])
    b_eq = np.concatenate([np.zeros(d), [1.0]])
    A = np.vstack([A, np.eye(m + 1)[-1:]])
    b = np.concatenate([np.zeros(m), [1.0]])
    res = solve_lp(LinearProgram(A, b, c, A_eq=A_eq, b_eq=b_eq))
    return res.optimal and res.value > tol


def polar(X: Union[VPolytope, HPolytope]):
    """Polar body: V -> {x : v_j . x <= 1}, H (b > 0) -> conv(a_j / b_j)."""
    if isinstance(X, VPolytope):
        if not origin_interior(X):
            raise OriginNotInteriorError("V-polytope")
        return HPolytope(X.points.copy(), np.ones(X.m), X.labels)
    if not origin_interior(X):
        raise OriginNotInteriorError("H-polytope (need b > 0)")
    return VPolytope(X.A / X.b[:, None], X.labels)


def hrep(K: VPolytope, tol: float = TOL.side) -> HPolytope:
    """Irredundant H-representation (unit normals) of a V-polytope."""
    hyper = _supporting_hyperplanes(K.points, tol, simplicial=False)
    A = np.array([n for _, n, _ in hyper])
    b = np.array([off for _, _, off in hyper])
    return HPolytope(A, b)


def inradius(P: Union[HPolytope, VPolytope]):
    """Chebyshev center LP: max r s.t. a_i . x + r ||a_i|| <= b_i."""
    if isinstance(P, VPolytope):
        P = hrep(P)
    d = P.dim
    norms = np.linalg.norm(P.A, axis=1)
    A = np.hstack([P.A, norms[:, None]])
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = solve_lp(LinearProgram(A, P.b, c))
    if res.status == "unbounded":
        raise UnboundedPolytopeError("inradius LP unbounded (polytope unbounded)")
    if not res.optimal or res.x[-1] < -TOL.absolute:
        raise EmptyPolytopeError("polytope is empty")
    return float(res.x[-1]), res.x[:d].copy()


def recenter(K: VPolytope) -> tuple[VPolytope, np.ndarray]:
    """Translate so the Chebyshev center sits at the origin.

    A toolkit convention for inputs whose origin is not interior.
    """
    _, center = inradius(K)
    return K.translated(-center), center


def _membership_margin(points: np.ndarray, x: np.ndarray) -> float:
    """l_inf distance from x to conv(points), via LP (0 when inside)."""
    m, d = points.shape
    # vars: lambda (m), s ; minimize s  s.t. |V^T lambda - x|_k <= s
    c = np.zeros(m + 1)
    c[-1] = 1.0
    VT = points.T
    A = np.vstack([np.hstack([VT, -np.ones((d, 1))]), np.hstack([-VT, -np.ones((d, 1))])])
    b = np.concatenate([x, -x])
    A_eq = np.hstack([np.ones((1, m)), [[0.0]]])
    res = solve_lp(LinearProgram(A, b, c, sense="min", A_eq=A_eq, b_eq=[1.0], nonneg=True))
    return float(res.value)


def containment_check(inner: VPolytope, outer: Union[VPolytope, HPolytope],
                      tol: float = TOL.absolute) -> tuple[bool, float]:
    """Is every vertex of ``inner`` in ``outer``?  Returns (verdict, worst margin).

    The margin is the largest signed violation: Euclidean distance beyond the
    worst facet for an H-polytope, l_inf distance to the hull for a V-polytope.
    """
    if isinstance(outer, HPolytope):
        n = np.linalg.norm(outer.A, axis=1)
        viol = (inner.points @ outer.A.T - outer.b) / n
        worst = float(viol.max())
    else:
        worst = max(_membership_margin(outer.points, x) for x in inner.points)
    return worst <= tol, worst


# ------------------------------------------------------------------ integer data


def _bareiss_det(M: list[list[int]]) -> int:
    a = [row[:] for row in M]
    n = len(a)
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _as_int_matrix(M) -> list[list[int]]:
    arr = np.asarray(M, dtype=object)
    out = []
    for row in np.atleast_2d(arr):
        r = []
        for v in row:
            if isinstance(v, (int, np.integer)):
                r.append(int(v))
            else:
                fv = float(v)
                if not fv.is_integer():
                    raise GeometryError(f"non-integral entry {v!r}")
                r.append(int(fv))
        out.append(r)
    return out


def integer_data(A, b) -> IntegerData:
    """Largest d x d minor of [A|b], norms and the largest (d-1) x (d-1) minor of A.

    Exact integer arithmetic over all row and column subsets.
    """
    Ai = _as_int_matrix(A)
    bi = [r[0] for r in _as_int_matrix(np.asarray(b, dtype=object).reshape(-1, 1))]
    m, d = len(Ai), len(Ai[0])
    Ab = [Ai[i] + [bi[i]] for i in range(m)]
    delta = 0
    for rows in itertools.combinations(range(m), d):
        for cols in itertools.combinations(range(d + 1), d):
            det = _bareiss_det([[Ab[r][c] for c in cols] for r in rows])
            delta = max(delta, abs(det))
    delta_dm1 = 0
    if d >= 2:
        for rows in itertools.combinations(range(m), d - 1):
            for cols in itertools.combinations(range(d), d - 1):
                det = _bareiss_det([[Ai[r][c] for c in cols] for r in rows])
                delta_dm1 = max(delta_dm1, abs(det))
    else:
        delta_dm1 = 1
    normA = max(abs(v) for row in Ai for v in row)
    normB = max(abs(v) for v in bi)
    return IntegerData(delta, normA, normB, delta_dm1)


# ------------------------------------------------------------------ metric sums


def codim2_perimeter(fc: FacetComplex) -> float:
    return float(sum(r.volume for r in fc.ridges))


def surface_area(fc: FacetComplex) -> float:
    return float(fc.facet_volumes().sum())


def volume(fc: FacetComplex) -> float:
    return float((fc.offsets() * fc.facet_volumes()).sum() / fc.dim)


def mean_curvature_sum(fc: FacetComplex) -> float:
    """sum over ridges S<T of |F_ST| * theta_ST."""
    return float(sum(r.volume * r.angle for r in fc.ridges))


# ------------------------------------------------------------------ generators


def cube(d: int = 3, half: float = 1.0) -> VPolytope:
    pts = np.array(list(itertools.product((-half, half), repeat=d)), dtype=float)
    return VPolytope(pts)


def cube_h(d: int = 3, half: float = 1.0) -> HPolytope:
    I = np.eye(d)
    return HPolytope(np.vstack([I, -I]), np.full(2 * d, half))


def cross_polytope(d: int = 3, radius: float = 1.0) -> VPolytope:
    I = np.eye(d) * radius
    return VPolytope(np.vstack([I, -I]))


def cross_polytope_h(d: int = 3) -> HPolytope:
    A = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
    return HPolytope(A, np.ones(len(A)))


def regular_simplex(d: int = 3, edge: float = 1.0) -> VPolytope:
    """Regular simplex centred at the origin."""
    E = np.eye(d + 1)
    c = E.mean(axis=0)
    _, _, vt = np.linalg.svd(E - c)
    pts = (E - c) @ vt[:d].T
    pts *= edge / math.sqrt(2.0)
    return VPolytope(pts)


def standard_simplex_h(d: int = 2) -> HPolytope:
    A = np.vstack([-np.eye(d), np.ones((1, d))])
    b = np.concatenate([np.zeros(d), [1.0]])
    return HPolytope(A, b)


def random_sphere(m: int, d: int, seed: int) -> VPolytope:
    """m points uniform on the unit sphere (seeded)."""
    return VPolytope(Stream(seed, 0x5EED).unit_vectors(m, d))


def random_simplicial(m: int, d: int, seed: int) -> VPolytope:
    """Random sphere polytope whose origin is interior (redrawn until it is)."""
    for attempt in range(1000):
        K = random_sphere(m, d, seed * 1000 + attempt)
        if origin_interior(K):
            return K
    raise GeometryError("could not draw a polytope with interior origin")


def random_integral_hpolytope(d: int, seed: int, entry_max: int = 5, extra_rows: int = 4) -> HPolytope:
    """Bounded integral {Ax <= b} with entries |a_ij| <= entry_max, 1 <= b_i <= entry_max."""
    st = Stream(seed, 0x1A7E)
    for _ in range(10_000):
        m = d + 1 + int(st.uniform() * extra_rows)
        A = np.floor(st.uniform((m, d)) * (2 * entry_max + 1)).astype(int) - entry_max
        b = 1 + np.floor(st.uniform(m) * entry_max).astype(int)
        if np.any(np.abs(A).sum(axis=1) == 0):
            continue
        P = HPolytope(A, b)
        if P.is_bounded():
            return P
    raise GeometryError("failed to draw a bounded integral polytope")


# ------------------------------------------------------------------ file format


class PolytopeFormatError(GeometryError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"field '{field_name}': {message}")
        self.field = field_name


def polytope_from_dict(obj: dict) -> Union[VPolytope, HPolytope]:
    if not isinstance(obj, dict):
        raise PolytopeFormatError("<root>", "expected a JSON object")
    allowed = {"kind", "dim", "points", "A", "b", "labels"}
    unknown = set(obj) - allowed
    if unknown:
        raise PolytopeFormatError(sorted(unknown)[0], "unknown field")
    kind = obj.get("kind")
    if kind not in ("V", "H"):
        raise PolytopeFormatError("kind", f"must be 'V' or 'H', got {kind!r}")
    dim = obj.get("dim")
    if not isinstance(dim, int) or dim < 1:
        raise PolytopeFormatError("dim", f"must be a positive integer, got {dim!r}")
    labels = obj.get("labels")
    labels = tuple(labels) if labels is not None else None

    def matrix(name):
        val = obj.get(name)
        if val is None:
            raise PolytopeFormatError(name, "missing")
        try:
            arr = np.array(val, dtype=float)
        except (TypeError, ValueError) as exc:
            raise PolytopeFormatError(name, f"not numeric ({exc})") from None
        if arr.ndim != 2 or arr.shape[1] != dim:
            raise PolytopeFormatError(name, f"expected rows of length {dim}")
        return arr

    if kind == "V":
        return VPolytope(matrix("points"), labels)
    A = matrix("A")
    try:
        b = np.array(obj.get("b"), dtype=float)
    except (TypeError, ValueError):
        raise PolytopeFormatError("b", "not numeric") from None
    if b.ndim != 1 or b.size != A.shape[0]:
        raise PolytopeFormatError("b", f"expected {A.shape[0]} entries")
    return HPolytope(A, b, labels)


def polytope_to_dict(X: Union[VPolytope, HPolytope]) -> dict:
    def clean(a):
        return [[int(v) if float(v).is_integer() else float(v) for v in row] for row in np.atleast_2d(a)]

    if isinstance(X, VPolytope):
        out = {"kind": "V", "dim": X.dim, "points": clean(X.points)}
    else:
        out = {"kind": "H", "dim": X.dim, "A": clean(X.A), "b": clean(X.b[None, :])[0]}
    if X.labels is not None:
        out["labels"] = list(X.labels)
    return out


def load_polytope(path: Union[str, Path]) -> Union[VPolytope, HPolytope]:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PolytopeFormatError("<json>", f"line {exc.lineno}: {exc.msg}") from None
    return polytope_from_dict(obj)


def save_polytope(X: Union[VPolytope, HPolytope], path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(polytope_to_dict(X), indent=1) + "\n")


GENERATORS = {
    "cube": lambda d=3: cube(int(d)),
    "cube_h": lambda d=3: cube_h(int(d)),
    "cross": lambda d=3: cross_polytope(int(d)),
    "cross_h": lambda d=3: cross_polytope_h(int(d)),
    "simplex": lambda d=3: regular_simplex(int(d)),
    "sphere": lambda m=20, d=3, seed=0: random_simplicial(int(m), int(d), int(seed)),
    "integral": lambda d=3, seed=0: random_integral_hpolytope(int(d), int(seed)),
}


def generate(spec: str) -> Union[VPolytope, HPolytope]:
    """Parse ``name[:k=v,...]``, e.g. ``sphere:m=20,d=3,seed=4``."""
    name, _, args = spec.partition(":")
    if name not in GENERATORS:
        raise PolytopeFormatError("generator", f"unknown generator {name!r}; choose from {sorted(GENERATORS)}")
    kw = {}
    for item in filter(None, args.split(",")):
        k, eq, v = item.partition("=")
        if not eq:
            raise PolytopeFormatError("generator", f"bad argument {item!r} (expected key=value)")
        kw[k.strip()] = v.strip()
    try:
        return GENERATORS[name](**kw)
    except TypeError as exc:
        raise PolytopeFormatError("generator", str(exc)) from None
