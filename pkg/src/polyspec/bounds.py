"""Diameter bounds from the spectrum of the normalised Hessian, compared with
exact BFS diameters.

All logarithms are natural.  The vertex diameter of an H-polytope P is the
facet diameter of its polar, so every bound for P is evaluated on the facet
complex of ``polar(P)``.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .config import TOL
from .geometry import (
    FacetComplex,
    GeometryError,
    HPolytope,
    VPolytope,
    facets_of_vpolytope,
    integer_data,
    polar,
)
from .linalg import NumericalError, SymMatrix, eigh
from .spectral import build_bundle


class SoundnessError(AssertionError):
    """A computed upper bound fell below the exact diameter."""


def graph_diameter(fc_or_adj) -> int:
    adj = fc_or_adj.adjacency if isinstance(fc_or_adj, FacetComplex) else fc_or_adj
    nodes = list(adj)
    best = 0
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
            raise GeometryError("facet graph is disconnected (enumeration bug)")
        best = max(best, max(dist.values()))
    return best


def bfs_distances(adj: dict, source: int) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def gershgorin_lower(M) -> float:
    A = np.asarray(M, dtype=float)
    return -float(np.abs(A).sum(axis=1).max())


def chebyshev_diameter_apriori(N: int, g: float, v_min: float) -> float:
    """2 log(2N / v_min^2) / sqrt(g)."""
    if not g > 0 or not v_min > 0:
        raise ValueError("need g > 0 and v_min > 0")
    return 2.0 * math.log(2.0 * N / v_min**2) / math.sqrt(g)


def _top_pair(A: np.ndarray, tol: float):
    spec = eigh(A)
    ev = spec.eigenvalues
    lam, v = float(ev[-1]), spec.eigenvectors[:, -1]
    g = lam - 1.0
    if not g > 0:
        raise NumericalError(f"top eigenvalue {lam} is not above 1", g)
    if ev.size > 1 and (ev[-2] > 1.0 + tol or ev[0] < -1.0 - tol):
        raise NumericalError(
            f"remaining spectrum [{ev[0]:.6g}, {ev[-2]:.6g}] not inside [-1, 1]", float(max(ev[-2] - 1, -1 - ev[0]))
        )
    v = np.abs(v) / np.linalg.norm(v)
    return g, v


def chebyshev_diameter_certified(A, N: Optional[int] = None, tol: float = TOL.top_eigenvalue) -> int:
    """Smallest k with v_min^2 T_k(1+g) > N.

    A must have top eigenpair (1+g, v) and all other eigenvalues in [-1, 1];
    then T_k(A) differs from v v^T T_k(1+g) by at most N entrywise, so the
    condition forces every entry of T_k(A) to be nonzero.
    """
    A = np.asarray(A, dtype=float)
    N = N or A.shape[0]
    g, v = _top_pair(A, tol)
    target = N / float(v.min()) ** 2
    x = 1.0 + g
    t_prev, t = 1.0, x
    k = 1
    while not t > target:
        t_prev, t = t, 2.0 * x * t - t_prev
        k += 1
        if not math.isfinite(t):
            raise NumericalError("Chebyshev recurrence overflowed")
    return k


def chebyshev_direct_k(A, kmax: int = 10_000) -> int:
    """Smallest k for which T_k(A) has no zero entry (a diameter bound as well)."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    prev, cur = np.eye(n), A.copy()
    k = 1
    scale = max(1.0, np.abs(A).max())
    while np.any(np.abs(cur) <= 1e-12 * scale**k):
        prev, cur = cur, 2.0 * A @ cur - prev
        k += 1
        if k > kmax:
            raise NumericalError("no entrywise-nonzero Chebyshev polynomial found")
    return k


# ------------------------------------------------------------------ spectral instance


@dataclass(frozen=True)
class ChebyshevInstance:
    M: np.ndarray  # (D^{-1/2} H D^{-1/2} + c I) / c
    c: float
    g: float
    v_min: float
    theta0: float
    N: int


def theta_min(fc: FacetComplex) -> float:
    ang = fc.ridge_arrays()[3]
    return float(np.minimum(ang, np.pi - ang).min())


def chebyshev_instance(fc: FacetComplex) -> ChebyshevInstance:
    """Shift and scale the normalised Hessian so its top eigenvalue is
    1 + sin^2(theta0/2) and the rest lie in [0, 1]."""
    b = build_bundle(fc)
    th0 = theta_min(fc)
    c = 1.0 / math.sin(th0 / 2.0) ** 2
    M = (np.asarray(b.scaled) + c * np.eye(fc.N)) / c
    w = np.sqrt(b.D)
    return ChebyshevInstance(M, c, 1.0 / c, float(w.min() / np.linalg.norm(w)), th0, fc.N)


def worst_case_vmin(fc: FacetComplex) -> float:
    """sin^2(theta0) / (4 N^{3/2}) * min F / max F."""
    th0 = theta_min(fc)
    vol = fc.ridge_arrays()[2]
    return math.sin(th0) ** 2 / (4.0 * fc.N**1.5) * float(vol.min() / vol.max())


# ------------------------------------------------------------------ H-polytope pipeline


def _as_integral(P: HPolytope) -> HPolytope:
    if not (np.all(np.mod(P.A, 1) == 0) and np.all(np.mod(P.b, 1) == 0)):
        raise GeometryError("integral A and b required")
    return P


def polar_complex(P: HPolytope) -> FacetComplex:
    return facets_of_vpolytope(polar(P), allow_nonsimplicial=True)


def theorem44_bound(P: HPolytope, vmin: str = "exact", fc: Optional[FacetComplex] = None) -> float:
    """Vertex-diameter bound for P from the polar's Hessian.

    ``vmin="exact"`` uses the per-instance minimum entry of the top
    eigenvector; ``vmin="worst"`` uses the worst-case angle/volume bound.
    """
    fc = fc or polar_complex(P)
    inst = chebyshev_instance(fc)
    v = inst.v_min if vmin == "exact" else worst_case_vmin(fc)
    return chebyshev_diameter_apriori(inst.N, inst.g, v)


def theorem11_bound(P: HPolytope, C: float = 1.0) -> float:
    """Headline form C d^2 Delta ||A|| log(m ||A|| ||b|| Delta); not certified."""
    P = _as_integral(P)
    I = integer_data(P.A.astype(int), P.b.astype(int))
    m, d = P.A.shape
    return C * d**2 * I.Delta * I.normA * math.log(m * I.normA * I.normB * I.Delta)


def theorem11_explicit(P: HPolytope) -> float:
    """Constant-free chain using only integer data.

    sin(theta0) >= 1/(2 d Delta ||A||), so sqrt(g) = sin(theta0/2) >=
    1/(4 d Delta ||A||); v_min from the worst-case form with the ridge-volume
    envelopes and N <= m.
    """
    P = _as_integral(P)
    I = integer_data(P.A.astype(int), P.b.astype(int))
    m, d = P.A.shape
    s = 1.0 / (2 * d * I.Delta * I.normA)
    log_ratio = -math.log(math.factorial(d)) - 2 * d * math.log(I.normB) - d * math.log(math.sqrt(d) * I.normA)
    log_vmin = 2 * math.log(s) - math.log(4.0) - 1.5 * math.log(m) + log_ratio
    return 2.0 * (math.log(2.0 * m) - 2.0 * log_vmin) * (4.0 * d * I.Delta * I.normA)


@dataclass(frozen=True)
class WorstCase:
    minRidgeVolLB: float
    maxRidgeVolUB: float
    cscUB: float
    minRidgeVol: float
    maxRidgeVol: float
    maxCsc: float

    @property
    def enveloped(self) -> bool:
        return (
            self.minRidgeVol >= self.minRidgeVolLB * (1 - 1e-12)
            and self.maxRidgeVol <= self.maxRidgeVolUB * (1 + 1e-12)
            and self.maxCsc <= self.cscUB * (1 + 1e-12)
        )


def worst_case_estimates(P: HPolytope, fc: Optional[FacetComplex] = None) -> WorstCase:
    P = _as_integral(P)
    I = integer_data(P.A.astype(int), P.b.astype(int))
    d = P.dim
    fc = fc or polar_complex(P)
    _, _, vol, ang = fc.ridge_arrays()
    return WorstCase(
        1.0 / (math.factorial(d) * I.normB ** (2 * d)),
        (math.sqrt(d) * I.normA) ** d,
        2.0 * d * I.Delta * I.normA,
        float(vol.min()),
        float(vol.max()),
        float((1.0 / np.sin(ang)).max()),
    )


@dataclass(frozen=True)
class DiameterReport:
    exactDiameter: int
    chebyshevApriori: float
    chebyshevCertified: int
    theorem44Bound: Optional[float]
    theorem11Bound: Optional[float]
    gapUsed: float
    vMinUsed: float
    thetaMin: float
    N: int
    directK: int
    theorem44WorstCase: Optional[float] = None
    theorem11Explicit: Optional[float] = None

    def sound(self) -> bool:
        vals = [self.chebyshevApriori, self.chebyshevCertified, self.directK,
                self.theorem44Bound, self.theorem44WorstCase, self.theorem11Explicit]
        return all(v is None or v >= self.exactDiameter for v in vals)

    def as_dict(self) -> dict:
        return asdict(self)


def diameter_report(X: Union[HPolytope, VPolytope, FacetComplex], check: bool = True) -> DiameterReport:
    """Exact facet diameter and every bound for a facet complex.

    For an H-polytope the complex is that of its polar, so the diameters are
    vertex diameters of P and the integer-data bounds are included.
    """
    P = X if isinstance(X, HPolytope) else None
    if isinstance(X, FacetComplex):
        fc = X
    elif P is not None:
        fc = polar_complex(P)
    else:
        fc = facets_of_vpolytope(X, allow_nonsimplicial=True)
    exact = graph_diameter(fc)
    inst = chebyshev_instance(fc)
    apriori = chebyshev_diameter_apriori(inst.N, inst.g, inst.v_min)
    certified = chebyshev_diameter_certified(inst.M, inst.N)
    direct = chebyshev_direct_k(inst.M)
    t44 = t44w = t11 = t11x = None
    if P is not None:
        t44 = apriori
        t44w = chebyshev_diameter_apriori(inst.N, inst.g, worst_case_vmin(fc))
        integral = np.all(np.mod(P.A, 1) == 0) and np.all(np.mod(P.b, 1) == 0)
        if integral:
            t11 = theorem11_bound(P)
            t11x = theorem11_explicit(P)
    rep = DiameterReport(exact, apriori, certified, t44, t11, inst.g, inst.v_min, inst.theta0,
                         inst.N, direct, t44w, t11x)
    if check:
        if not rep.sound():
            raise SoundnessError(f"bound below exact diameter: {rep}")
        if certified > math.ceil(apriori):
            raise SoundnessError(f"certified k* {certified} exceeds ceil(apriori) {apriori}")
    return rep
