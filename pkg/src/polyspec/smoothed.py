"""Smoothed unit-LP instances and the Monte Carlo machinery around them.

An instance perturbs base points a_j (||a_j|| <= 1) by Gaussians g_j to get
v_j = a_j + g_j; K = conv(v_j) and P = {x : <v_j, x> <= 1} is its polar.

Random 2-planes W = a + span(V) are drawn with V uniform and a on the
boundary of L0 + 2 eta B, found by ray casting from the centroid of L0.
They drive three estimators:

* plane sections of P (shadow-vertex counts);
* a Horvitz-Thompson estimate of the codimension-2 perimeter of K: given
  a, a plane meets a small ridge patch of area dA at y with probability
  dA cos(theta) / (A_{d-2} |y - a|^{d-2}), where cos(theta) is the length
  of the component of (y - a)/|y - a| orthogonal to the ridge and
  A_{d-2} = pi^{(d-1)/2} / Gamma((d-1)/2);
* an importance-weighted surface area of L0 + 2 eta B.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import nnls
from scipy.special import gammaln

from .chain import build_chain, giant_component, mass_lower_limit
from .geometry import (
    FacetComplex,
    GeometryError,
    HPolytope,
    NearDegeneracyError,
    VPolytope,
    containment_check,
    facets_of_vpolytope,
    hrep,
    inradius,
)
from .rng import Stream

# ------------------------------------------------------------------ instances


@dataclass(frozen=True)
class SmoothedInstance:
    base: np.ndarray
    sigma: float
    g: np.ndarray
    v: np.ndarray
    seed: int

    def __post_init__(self):
        if np.any(np.linalg.norm(self.base, axis=1) > 1.0 + 1e-12):
            raise ValueError("base points must satisfy ||a_j|| <= 1")

    @property
    def m(self) -> int:
        return self.base.shape[0]

    @property
    def d(self) -> int:
        return self.base.shape[1]

    def K(self) -> VPolytope:
        return VPolytope(self.v)

    def K0(self) -> VPolytope:
        return VPolytope(self.base)

    def P(self) -> HPolytope:
        return HPolytope(self.v, np.ones(self.m))


def sample_instance(base, sigma: float, seed: int, tag: int = 0) -> SmoothedInstance:
    base = np.asarray(base, dtype=float)
    g = sigma * Stream(seed, 0x5A, tag).normal(base.shape)
    return SmoothedInstance(base, float(sigma), g, base + g, int(seed))


def sphere_base(m: int, d: int, seed: int) -> np.ndarray:
    return Stream(seed, 0xBA5E).unit_vectors(m, d)


def two_stage_split(sigma: float, m: int, exponent: float = 8) -> tuple[float, float]:
    """sigma1 = m^e sigma2 with sigma1^2 + sigma2^2 = sigma^2."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    ratio = float(m) ** exponent
    s2 = sigma / math.sqrt(1.0 + ratio * ratio)
    return ratio * s2, s2


def alpha_of(sigma: float, m: int, d: int) -> float:
    return 6.0 * sigma * math.sqrt(d * math.log(m))


def facet_complex_any(K: VPolytope) -> FacetComplex:
    try:
        return facets_of_vpolytope(K)
    except NearDegeneracyError:
        return facets_of_vpolytope(K, allow_nonsimplicial=True)


@dataclass(frozen=True)
class AssumptionReport:
    rBest: float
    alpha: float
    r: float
    satisfiesR: bool
    satisfiesS: bool
    logMinDist: float
    logEps: float
    eventB: bool
    maxNoise: float
    eventC: bool


def leave_one_out_inradius(base: np.ndarray) -> float:
    """min_j inradius(conv(a_i : i != j)); 0 if some hull is lower-dimensional."""
    best = math.inf
    for j in range(base.shape[0]):
        pts = np.delete(base, j, axis=0)
        try:
            r, _ = inradius(VPolytope(pts))
        except GeometryError:
            return 0.0
        best = min(best, r)
    return max(best, 0.0)


def check_assumptions(inst: SmoothedInstance, r: Optional[float] = None,
                      fc: Optional[FacetComplex] = None) -> AssumptionReport:
    """Roundedness, smallness of sigma and the two truncation events.

    Event B compares log min dist(v_j, aff F_S) over facets S of K and j not
    in S with log eps = -5 d log m, so eps itself never underflows.
    """
    m, d = inst.m, inst.d
    r_best = leave_one_out_inradius(inst.base)
    r_used = r_best if r is None else float(r)
    alpha = alpha_of(inst.sigma, m, d)
    log_eps = -5.0 * d * math.log(m)
    try:
        fc = fc or facet_complex_any(inst.K())
        N = fc.normals()
        dist = np.abs(inst.v @ N.T - fc.offsets())
        for k, f in enumerate(fc.facets):
            dist[list(f.vertices), k] = np.inf
        mind = float(dist.min())
        log_min = math.log(mind) if mind > 0 else -math.inf
    except GeometryError:
        log_min = -math.inf
    max_noise = float(np.linalg.norm(inst.g, axis=1).max())
    return AssumptionReport(
        r_best, alpha, r_used, r_best >= r_used and r_best > 0, alpha < r_used / d**2,
        log_min, log_eps, log_min >= log_eps, max_noise, max_noise <= alpha,
    )


def scaled_containment_check(inst: SmoothedInstance, r: float) -> tuple[bool, float]:
    """(1 + 2 alpha / r)^{-1} K0 inside K?"""
    alpha = alpha_of(inst.sigma, inst.m, inst.d)
    inner = inst.K0().scaled(1.0 / (1.0 + 2.0 * alpha / r))
    return containment_check(inner, inst.K())


@dataclass(frozen=True)
class RoundednessResult:
    ratios: np.ndarray  # r_in / sigma1 per trial
    quantiles: dict
    failFraction: float  # r_in < sigma1 m^-5
    failFractionLoose: float  # r_in < sigma1 m^-4 / (d + 1)


def roundedness_trial(base, sigma1: float, trials: int, seed: int) -> RoundednessResult:
    base = np.asarray(base, dtype=float)
    m, d = base.shape
    if m < d + 1:
        raise ValueError("need m >= d + 1")
    out = np.empty(trials)
    for t in range(trials):
        inst = sample_instance(base, sigma1, seed, tag=t)
        try:
            out[t] = inradius(inst.K())[0]
        except GeometryError:
            out[t] = 0.0
    ratios = out / sigma1
    q = {p: float(np.quantile(ratios, p)) for p in (0.01, 0.05, 0.5, 0.95)}
    return RoundednessResult(ratios, q, float(np.mean(ratios < m**-5.0)),
                             float(np.mean(ratios < m**-4.0 / (d + 1))))


# ------------------------------------------------------------------ distance to a polytope


class PolytopeDistance:
    """Nearest points on a full-dimensional polytope.

    d = 3 uses an exact vectorised path (fan-triangulated facets and their
    edges); other dimensions solve the projection as a non-negative least
    squares problem with a heavily weighted sum-to-one row.
    """

    def __init__(self, fc: FacetComplex):
        self.fc = fc
        self.d = fc.dim
        self.normals = fc.normals()
        self.offsets = fc.offsets()
        V = fc.points[fc.vertex_indices()]
        self.vertices = V
        self.centroid = V.mean(axis=0)
        self.radius = float(np.linalg.norm(V - self.centroid, axis=1).max())
        if self.d == 3:
            self._build_triangles()

    def _build_triangles(self):
        tris, edges = [], []
        P = self.fc.points
        for f in self.fc.facets:
            pts = P[list(f.vertices)]
            c = pts.mean(axis=0)
            n = f.normal
            e1 = pts[0] - c
            e1 /= np.linalg.norm(e1)
            e2 = np.cross(n, e1)
            ang = np.arctan2((pts - c) @ e2, (pts - c) @ e1)
            ring = pts[np.argsort(ang)]
            for k in range(1, len(ring) - 1):
                tris.append((ring[0], ring[k], ring[k + 1]))
            for k in range(len(ring)):
                edges.append((ring[k], ring[(k + 1) % len(ring)]))
        T = np.array(tris)
        p0 = T[:, 0]
        E1 = T[:, 1] - p0
        E2 = T[:, 2] - p0
        n = np.cross(E1, E2)
        area2 = np.linalg.norm(n, axis=1)
        keep = area2 > 1e-14 * max(1.0, self.radius) ** 2
        p0, E1, E2, n, area2 = p0[keep], E1[keep], E2[keep], n[keep], area2[keep]
        self.t_p0 = p0
        self.t_n = n / area2[:, None]
        # dual basis so that (x - p0) . g1 and . g2 are barycentric coordinates
        G = np.stack([E1, E2], axis=2)  # (t, 3, 2)
        self.t_dual = np.linalg.pinv(G)  # (t, 2, 3)
        Ea = np.array([e[0] for e in edges])
        Eb = np.array([e[1] for e in edges])
        self.e_a = Ea
        self.e_d = Eb - Ea
        self.e_len2 = (self.e_d**2).sum(axis=1)

    def inside(self, X: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return (X @ self.normals.T - self.offsets <= tol).all(axis=1)

    def nearest(self, X, chunk: int = 100_000):
        """(distances, nearest points) for an (n, d) array."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        dist = np.zeros(len(X))
        near = X.copy()
        out = ~self.inside(X)
        idx = np.nonzero(out)[0]
        for s in range(0, idx.size, chunk):
            sl = idx[s:s + chunk]
            if self.d == 3:
                dd, nn = self._nearest3(X[sl])
            else:
                dd, nn = self._nearest_nnls(X[sl])
            dist[sl] = dd
            near[sl] = nn
        return dist, near

    def _nearest3(self, X):
        n = len(X)
        best = np.full(n, np.inf)
        bestp = np.zeros_like(X)
        # triangle interiors
        rel = X[:, None, :] - self.t_p0[None, :, :]  # (n, t, 3)
        h = np.einsum("ntk,tk->nt", rel, self.t_n)
        proj = rel - h[..., None] * self.t_n[None]
        bary = np.einsum("tjk,ntk->ntj", self.t_dual, proj)
        ok = (bary[..., 0] >= 0) & (bary[..., 1] >= 0) & (bary.sum(axis=2) <= 1)
        ah = np.where(ok, np.abs(h), np.inf)
        k = ah.argmin(axis=1)
        rows = np.arange(n)
        cand = ah[rows, k]
        better = cand < best
        best[better] = cand[better]
        bestp[better] = (X - h[rows, k][:, None] * self.t_n[k])[better]
        # edges
        rel = X[:, None, :] - self.e_a[None]
        t = np.clip(np.einsum("nek,ek->ne", rel, self.e_d) / self.e_len2, 0.0, 1.0)
        pts = self.e_a[None] + t[..., None] * self.e_d[None]
        dd = np.linalg.norm(X[:, None, :] - pts, axis=2)
        k = dd.argmin(axis=1)
        cand = dd[rows, k]
        better = cand < best
        best[better] = cand[better]
        bestp[better] = pts[rows, k][better]
        return best, bestp

    def _nearest_nnls(self, X):
        V = self.vertices
        w = 1e4 * max(1.0, self.radius)
        M = np.vstack([V.T, w * np.ones((1, len(V)))])
        dd = np.empty(len(X))
        nn = np.empty_like(X)
        for i, x in enumerate(X):
            lam, _ = nnls(M, np.concatenate([x, [w]]))
            p = V.T @ lam
            nn[i] = p
            dd[i] = np.linalg.norm(x - p)
        return dd, nn

    def distance(self, X) -> np.ndarray:
        return self.nearest(X)[0]


# ------------------------------------------------------------------ plane sampling


def log_sphere_area(d: int) -> float:
    """log |S^{d-1}|."""
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - gammaln(d / 2.0)


def crofton_constant(d: int) -> float:
    """A_{d-2} = pi^{(d-1)/2} / Gamma((d-1)/2)."""
    return math.exp(0.5 * (d - 1) * math.log(math.pi) - gammaln((d - 1) / 2.0))


@dataclass(frozen=True)
class PlaneSample:
    a: np.ndarray  # (n, d) base points on the boundary of L0 + 2 eta B
    frames: np.ndarray  # (n, d, 2) orthonormal
    weights: np.ndarray  # |a - c|^{d-1} / sin(phi)
    normals: np.ndarray  # outward unit normals of the offset body at a
    rejected: int
    center: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def ess(self) -> float:
        w = self.weights
        return float(w.sum() ** 2 / (w * w).sum()) if w.size else 0.0


def random_frames(n: int, d: int, stream: Stream) -> np.ndarray:
    G = stream.normal((n, d, 2))
    u = G[..., 0] / np.linalg.norm(G[..., 0], axis=1, keepdims=True)
    w = G[..., 1] - (G[..., 1] * u).sum(axis=1, keepdims=True) * u
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    return np.stack([u, w], axis=2)


def sample_plane(L0, eta: float, n: int, seed: int, dist: Optional[PolytopeDistance] = None,
                 max_newton: int = 60) -> PlaneSample:
    """Draw n planes W = a + span(V) with a on the boundary of L0 + 2 eta B.

    a is found by casting a uniform ray from the centroid c and solving
    dist(c + t u, L0) = 2 eta with safeguarded Newton steps; the importance
    weight |a - c|^{d-1} / sin(phi) converts the direction density into
    surface measure, so |S^{d-1}| * mean(weight) estimates the boundary area.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    if dist is None:
        fc = L0 if isinstance(L0, FacetComplex) else facet_complex_any(L0)
        dist = PolytopeDistance(fc)
    d = dist.d
    st = Stream(seed, 0x91A)
    U = st.split(1).unit_vectors(n, d)
    frames = random_frames(n, d, st.split(2))
    c = dist.centroid
    rho = 2.0 * eta
    # exit time of the ray from L0 itself (H-rep), then Newton from the far side
    nu = U @ dist.normals.T
    slack = dist.offsets - dist.normals @ c
    with np.errstate(divide="ignore", invalid="ignore"):
        texit = np.where(nu > 0, slack / nu, np.inf).min(axis=1)
    lo = texit.copy()
    hi = np.full(n, dist.radius + rho + 1.0)
    t = hi.copy()
    done = np.zeros(n, dtype=bool)
    for _ in range(max_newton):
        act = ~done
        if not act.any():
            break
        X = c + t[act, None] * U[act]
        dd, pp = dist.nearest(X)
        f = dd - rho
        slope = np.einsum("nk,nk->n", (X - pp) / np.maximum(dd, 1e-300)[:, None], U[act])
        ia = np.nonzero(act)[0]
        pos = f > 0
        hi[ia[pos]] = t[ia[pos]]
        lo[ia[~pos]] = np.maximum(lo[ia[~pos]], t[ia[~pos]])
        conv = np.abs(f) <= 1e-13 * max(1.0, rho)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t[act] - f / slope
        bad = ~np.isfinite(newton) | (newton <= lo[act]) | (newton >= hi[act])
        step = np.where(bad, 0.5 * (lo[act] + hi[act]), newton)
        t[ia[~conv]] = step[~conv]
        done[ia[conv]] = True
    a = c + t[:, None] * U
    dd, pp = dist.nearest(a)
    ok = done & (np.abs(dd - rho) <= 1e-9 * max(1.0, rho))
    normals = (a - pp) / rho
    r = t
    sinphi = np.abs(np.einsum("nk,nk->n", normals, a - c)) / r
    ok &= sinphi > 1e-12
    w = r ** (d - 1) / np.where(ok, sinphi, 1.0)
    return PlaneSample(a[ok], frames[ok], w[ok], normals[ok], int((~ok).sum()), c)


def surface_area_estimate(ps: PlaneSample, d: int) -> tuple[float, float]:
    """(estimate, standard error) of the boundary area of L0 + 2 eta B."""
    s = math.exp(log_sphere_area(d))
    w = ps.weights
    return s * float(w.mean()), s * float(w.std(ddof=1) / math.sqrt(w.size))


# ------------------------------------------------------------------ plane sections


@dataclass(frozen=True)
class Sections:
    counts: np.ndarray  # vertices per plane
    plane: np.ndarray  # plane index of each vertex
    pair: np.ndarray  # (k, 2) constraint indices tight at each vertex
    points: np.ndarray  # (k, d) vertices in R^d


def plane_sections(a: np.ndarray, frames: np.ndarray, A: np.ndarray, b: np.ndarray,
                   tol: float = 1e-9, chunk: int = 4096) -> Sections:
    """Vertices of the polygons {y : A(a + W y) <= b} for a batch of planes."""
    a = np.atleast_2d(a)
    frames = frames.reshape(len(a), A.shape[1], 2)
    m = A.shape[0]
    I, J = np.triu_indices(m, 1)
    counts = np.zeros(len(a), dtype=np.int64)
    planes, pairs, pts = [], [], []
    scale = max(1.0, float(np.abs(b).max()))
    for s in range(0, len(a), chunk):
        aa, WW = a[s:s + chunk], frames[s:s + chunk]
        A2 = np.einsum("mk,nkj->nmj", A, WW)  # (n, m, 2)
        b2 = b[None, :] - aa @ A.T  # (n, m)
        a1, a2 = A2[:, I], A2[:, J]  # (n, p, 2)
        det = a1[..., 0] * a2[..., 1] - a1[..., 1] * a2[..., 0]
        rn = np.linalg.norm(a1, axis=2) * np.linalg.norm(a2, axis=2)
        ok = np.abs(det) > 1e-12 * np.maximum(rn, 1e-300)
        sdet = np.where(ok, det, 1.0)
        y0 = (b2[:, I] * a2[..., 1] - b2[:, J] * a1[..., 1]) / sdet
        y1 = (a1[..., 0] * b2[:, J] - a2[..., 0] * b2[:, I]) / sdet
        Y = np.stack([y0, y1], axis=2)  # (n, p, 2)
        viol = np.einsum("nmj,npj->npm", A2, Y) - b2[:, None, :]
        feas = ok & (viol <= tol * scale).all(axis=2)
        n_idx, p_idx = np.nonzero(feas)
        if n_idx.size == 0:
            continue
        y = Y[n_idx, p_idx]
        # merge coincident vertices (three or more concurrent lines)
        key = np.column_stack([n_idx, np.round(y / (1e-8 * scale)).astype(np.int64)])
        _, first = np.unique(key, axis=0, return_index=True)
        first.sort()
        n_idx, p_idx, y = n_idx[first], p_idx[first], y[first]
        counts[s:s + chunk] += np.bincount(n_idx, minlength=len(aa))
        planes.append(n_idx + s)
        pairs.append(np.column_stack([I[p_idx], J[p_idx]]))
        pts.append(aa[n_idx] + np.einsum("nkj,nj->nk", WW[n_idx], y))
    if planes:
        return Sections(counts, np.concatenate(planes), np.concatenate(pairs), np.concatenate(pts))
    d = A.shape[1]
    return Sections(counts, np.zeros(0, int), np.zeros((0, 2), int), np.zeros((0, d)))


def plane_section(a, frame, P: HPolytope) -> tuple[int, np.ndarray]:
    """Vertex count and vertices of a single 2-plane section."""
    sec = plane_sections(np.asarray(a, float)[None], np.asarray(frame, float)[None], P.A, P.b)
    return int(sec.counts[0]), sec.points


# ------------------------------------------------------------------ estimators


@dataclass(frozen=True)
class QuadratureEstimate:
    planeSamples: int
    hitCounts: np.ndarray  # per ridge of K
    estimate: float
    stderr: float
    exact: float
    shadowVertexMean: float
    effectiveSampleSize: float
    rejected: int
    multiHits: int

    @property
    def ratio(self) -> float:
        return self.estimate / self.exact

    @property
    def z(self) -> float:
        return (self.estimate - self.exact) / self.stderr if self.stderr > 0 else math.inf

    @property
    def flagged(self) -> bool:
        """Too few ridge hits to trust the interval."""
        return int(self.hitCounts.sum()) < 30


def _ridge_projectors(fc: FacetComplex) -> tuple[np.ndarray, np.ndarray]:
    """Projectors onto the orthogonal complement of each ridge's direction space,
    and an N x N table mapping a facet pair to its ridge index (-1 if none)."""
    d = fc.dim
    projs = np.empty((len(fc.ridges), d, d))
    for k, r in enumerate(fc.ridges):
        pts = fc.points[list(r.vertices)]
        diff = pts[1:] - pts[0]
        _, sv, vt = np.linalg.svd(diff, full_matrices=True)
        E = vt[: d - 2]
        projs[k] = np.eye(d) - E.T @ E
    table = np.full((fc.N, fc.N), -1, dtype=np.int64)
    for k, r in enumerate(fc.ridges):
        i, j = r.pair
        table[i, j] = table[j, i] = k
    return projs, table


def ridge_quadrature(fc: FacetComplex, ps: PlaneSample):
    """Per-plane Horvitz-Thompson contributions and per-ridge hit counts."""
    d = fc.dim
    A, b = fc.normals(), fc.offsets()
    sec = plane_sections(ps.a, ps.frames, A, b)
    projs, table = _ridge_projectors(fc)
    ridge = table[sec.pair[:, 0], sec.pair[:, 1]]
    keep = ridge >= 0
    plane, ridge, y = sec.plane[keep], ridge[keep], sec.points[keep]
    diff = y - ps.a[plane]
    r = np.linalg.norm(diff, axis=1)
    w = diff / r[:, None]
    cos = np.linalg.norm(np.einsum("kij,kj->ki", projs[ridge], w), axis=1)
    contrib = crofton_constant(d) * r ** (d - 2) / cos
    per_plane = np.bincount(plane, weights=contrib, minlength=ps.n)
    hits = np.bincount(ridge, minlength=len(fc.ridges))
    multi = int((np.bincount(plane * len(fc.ridges) + ridge) > 1).sum()) if plane.size else 0
    return per_plane, hits, sec, multi


def quadrature_perimeter_estimate(fc: FacetComplex, planes: int, seed: int, eta: float = 0.25,
                                  L0=None) -> QuadratureEstimate:
    """Estimate sum_{S<T} |F_ST| from random plane sections.

    ``L0`` defaults to the polytope itself (the sampler is then centred on it).
    """
    L0 = L0 if L0 is not None else fc
    dist = PolytopeDistance(L0 if isinstance(L0, FacetComplex) else facet_complex_any(L0))
    ps = sample_plane(L0, eta, planes, seed, dist=dist)
    per_plane, hits, sec, multi = ridge_quadrature(fc, ps)
    n = ps.n
    est = float(per_plane.mean())
    se = float(per_plane.std(ddof=1) / math.sqrt(n))
    exact = float(sum(r.volume for r in fc.ridges))
    return QuadratureEstimate(n, hits, est, se, exact, float(sec.counts.mean()), ps.ess,
                              ps.rejected, multi)


def segment_hit_rate(ps: PlaneSample, center, direction, half_length: float) -> tuple[float, int]:
    """Fraction of sampled planes (d = 3) crossing a segment, and the number
    of planes containing it entirely."""
    center = np.asarray(center, float)
    u = np.asarray(direction, float)
    u = u / np.linalg.norm(u)
    p = center - half_length * u
    q = center + half_length * u
    nrm = np.cross(ps.frames[..., 0], ps.frames[..., 1])
    sp = np.einsum("nk,nk->n", nrm, p - ps.a)
    sq = np.einsum("nk,nk->n", nrm, q - ps.a)
    hit = sp * sq <= 0
    contained = int(((np.abs(sp) < 1e-14) & (np.abs(sq) < 1e-14)).sum())
    return float(hit.mean()), contained


def intersection_constant_check(d: int, samples: int, seed: int) -> float:
    """sqrt(d) * E|cos| of a uniform direction against a fixed axis."""
    if d < 3:
        raise ValueError("d >= 3 required")
    U = Stream(seed, 0xC0D).unit_vectors(samples, d)
    return math.sqrt(d) * float(np.abs(U[:, 0]).mean())


@dataclass(frozen=True)
class ShadowResult:
    mean: float
    stderr: float
    maxCount: int
    counts: np.ndarray = field(repr=False)


def shadow_vertex_experiment(inst: SmoothedInstance, planes: int, seed: int, eta: float = 0.1,
                             ps: Optional[PlaneSample] = None) -> ShadowResult:
    """Vertex counts of random 2-plane sections of P = {x : <v_j, x> <= 1}.

    Planes come from the sampler on L0 = conv(base) + 2 eta B.
    """
    if ps is None:
        ps = sample_plane(inst.K0(), eta, planes, seed)
    sec = plane_sections(ps.a, ps.frames, inst.v, np.ones(inst.m))
    c = sec.counts
    return ShadowResult(float(c.mean()), float(c.std(ddof=1) / math.sqrt(c.size)), int(c.max()), c)


def shadow_sigma_sweep(base, sigmas: Sequence[float], planes: int, seed: int, eta: float = 0.1):
    """Shadow counts across a sigma ladder with common random numbers:
    the same Gaussian directions and the same planes at every sigma."""
    base = np.asarray(base, float)
    ps = sample_plane(VPolytope(base), eta, planes, seed)
    out = []
    for s in sigmas:
        inst = sample_instance(base, s, seed)
        out.append(shadow_vertex_experiment(inst, planes, seed, eta, ps=ps))
    return out


# ------------------------------------------------------------------ Steiner / quermassintegrals


def log_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - gammaln(d / 2.0 + 1.0)


@dataclass(frozen=True)
class SteinerCoefficients:
    volume: float
    surface: float  # sum |F_S|
    second: float  # sum_{S<T} |F_ST| theta_ST / 2
    ballVolume: float
    dim: int

    def exact_d3(self, eps: float) -> float:
        if self.dim != 3:
            raise ValueError("closed form only for d = 3")
        return self.volume + eps * self.surface + eps**2 * self.second + eps**3 * self.ballVolume

    def quermass_d3(self) -> np.ndarray:
        """W_j = coefficient_j / C(3, j)."""
        return np.array([self.volume, self.surface / 3.0, self.second / 3.0, self.ballVolume])


def steiner_coefficients(fc: FacetComplex) -> SteinerCoefficients:
    vol = float((fc.offsets() * fc.facet_volumes()).sum() / fc.dim)
    surf = float(fc.facet_volumes().sum())
    second = float(sum(r.volume * r.angle for r in fc.ridges) / 2.0)
    return SteinerCoefficients(vol, surf, second, math.exp(log_ball_volume(fc.dim)), fc.dim)


def mc_parallel_volume(fc: FacetComplex, eps: float, points: int, seed: int,
                       dist: Optional[PolytopeDistance] = None, chunk: int = 500_000):
    """Monte Carlo Vol(K + eps B): (estimate, binomial standard error)."""
    dist = dist or PolytopeDistance(fc)
    V = dist.vertices
    lo = V.min(axis=0) - eps
    hi = V.max(axis=0) + eps
    box = float(np.prod(hi - lo))
    st = Stream(seed, 0x57E1, int(round(eps * 1e9)))
    hits = 0
    done = 0
    while done < points:
        n = min(chunk, points - done)
        X = lo + st.uniform((n, fc.dim)) * (hi - lo)
        hits += int((dist.distance(X) <= eps).sum())
        done += n
    p = hits / points
    return box * p, box * math.sqrt(p * (1.0 - p) / points)


@dataclass(frozen=True)
class SteinerCheck:
    eps: tuple
    exact: tuple
    mc: tuple
    stderr: tuple
    fitted: Optional[tuple]  # (coef1, coef2) from the fit
    fittedStderr: Optional[tuple]
    coefficients: SteinerCoefficients
    illConditioned: bool

    def within(self, k: float = 3.0) -> bool:
        if self.exact[0] is not None:
            return all(abs(e - m) <= k * s for e, m, s in zip(self.exact, self.mc, self.stderr))
        c = self.coefficients
        return all(abs(f - t) <= k * s for f, t, s in
                   zip(self.fitted, (c.surface, c.second), self.fittedStderr))


def steiner_validate(fc: FacetComplex, eps_list: Sequence[float], mc_points: int, seed: int) -> SteinerCheck:
    """Compare Monte Carlo parallel volumes with the facet-complex Steiner sums.

    For d = 3 each eps is checked against the closed form; in any d the
    first two coefficients are fitted by weighted least squares (the
    constant and leading coefficients are known exactly and held fixed).
    """
    coef = steiner_coefficients(fc)
    dist = PolytopeDistance(fc)
    d = fc.dim
    mc, se = [], []
    for e in eps_list:
        v, s = mc_parallel_volume(fc, e, mc_points, seed, dist)
        mc.append(v)
        se.append(s)
    eps = np.asarray(eps_list, float)
    exact = tuple(coef.exact_d3(e) for e in eps) if d == 3 else tuple(None for _ in eps)
    fitted = fitted_se = None
    ill = False
    free = [1, 2] + list(range(3, d))
    if len(eps) >= len(free) and np.all(eps > 0):
        y = np.asarray(mc) - coef.volume - coef.ballVolume * eps**d
        X = np.column_stack([eps**k for k in free])
        w = 1.0 / np.asarray(se)
        Xw = X * w[:, None]
        cond = np.linalg.cond(Xw)
        ill = bool(cond > 1e8)
        beta, *_ = np.linalg.lstsq(Xw, y * w, rcond=None)
        cov = np.linalg.inv(Xw.T @ Xw)
        fitted = (float(beta[0]), float(beta[1]))
        fitted_se = (float(math.sqrt(cov[0, 0])), float(math.sqrt(cov[1, 1])))
    return SteinerCheck(tuple(eps_list), exact, tuple(mc), tuple(se), fitted, fitted_se, coef, ill)


def surface_area_offset_d3(fc: FacetComplex, rho: float) -> float:
    """Boundary area of K + rho B in d = 3: derivative of the Steiner polynomial."""
    c = steiner_coefficients(fc)
    return c.surface + 2.0 * c.second * rho + 4.0 * math.pi * rho**2


def af_logconcavity_check(W, rel: float = 1e-6) -> bool:
    """W_j^2 >= W_{j-1} W_{j+1} (1 - rel) for interior j."""
    W = np.asarray(W, float)
    return bool(np.all(W[1:-1] ** 2 >= W[:-2] * W[2:] * (1.0 - rel)))


# ------------------------------------------------------------------ end to end


@dataclass(frozen=True)
class EndToEndReport:
    seed: int
    m: int
    d: int
    sigma: float
    sigma1: float
    sigma2: float
    exponent: float
    alpha: float
    rBest: float
    satisfiesR: bool
    satisfiesS: bool
    eventB: bool
    eventC: bool
    jAvg: float
    piMassG: float
    chi2MassG: float
    diamG: int
    certifiedCutoff: float
    shadowMean: float
    piMassLimit: float
    N: int
    sound: bool

    CSV_COLUMNS = ("seed", "m", "d", "sigma", "alpha", "rBest", "eventB", "eventC", "jAvg",
                   "piMassG", "chi2MassG", "diamG", "certifiedCutoff", "shadowMean")

    def csv_row(self) -> list:
        return [getattr(self, c) for c in self.CSV_COLUMNS]


def end_to_end_theorem12(base, sigma: float, phi: float, seed: int, trials: int,
                         exponent: float = 8, planes: int = 0, eta: float = 0.1) -> EndToEndReport:
    """Two-stage perturbation, assumption checks and the giant-component run.

    Assumption failures are reported, not raised; only the soundness checks
    inside ``giant_component`` can raise.
    """
    base = np.asarray(base, float)
    m, d = base.shape
    if sigma > 0:
        s1, s2 = two_stage_split(sigma, m, exponent)
    else:
        s1 = s2 = 0.0
    stage1 = sample_instance(base, s1, seed, tag=1)
    a1 = stage1.v / max(1.0, float(np.linalg.norm(stage1.v, axis=1).max()))
    inst = sample_instance(a1, s2, seed, tag=2)
    fc = facet_complex_any(inst.K())
    rep = check_assumptions(inst, fc=fc)
    model = build_chain(fc)
    gc = giant_component(fc, phi, trials, seed, model=model)
    shadow = shadow_vertex_experiment(inst, planes, seed, eta).mean if planes > 0 else float("nan")
    limit = mass_lower_limit(phi, trials)
    sound = gc.piMass >= limit and gc.bfsDiameterOfG <= gc.certifiedDiameterBound
    return EndToEndReport(seed, m, d, float(sigma), s1, s2, float(exponent), rep.alpha, rep.rBest,
                          rep.satisfiesR, rep.satisfiesS, rep.eventB, rep.eventC, model.jAvg,
                          gc.piMass, gc.chi2Mass, gc.bfsDiameterOfG, gc.certifiedDiameterBound,
                          shadow, limit, fc.N, bool(sound))
