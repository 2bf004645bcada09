"""Formal Hessian, degree matrix and Laplacian of a facet complex.

Entry conventions (|F_ij| ridge volume, theta_ij angle between outward
normals):

    H_ij = |F_ij| csc(theta_ij)            (i != j, adjacent)
    H_ii = -sum_k |F_ik| cot(theta_ik)
    D_ii = sum_k |F_ik| tan(theta_ik / 2)
    L_ij = -|F_ij| csc(theta_ij),  L_ii = -sum_{j != i} L_ij

so that H = -L + diag(D) because csc - cot = tan(theta / 2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import TOL
from .geometry import (
    DegeneratePolytopeError,
    FacetComplex,
    GeometryError,
    HPolytope,
    OriginNotInteriorError,
    facets_of_hpolytope,
    vertices_of_hpolytope,
)
from .linalg import LinearProgram, Spectrum, SymMatrix, eigh, solve_lp
from .rng import Stream


def _ridge_terms(fc: FacetComplex):
    i, j, vol, ang = fc.ridge_arrays()
    if np.any((ang <= 0.0) | (ang >= np.pi)):
        raise GeometryError("ridge angle at 0 or pi")
    return i, j, vol, ang


def _require_origin(fc: FacetComplex, tol: float = TOL.absolute) -> None:
    if not fc.origin_interior(tol):
        raise OriginNotInteriorError("facet complex")


def build_hessian(fc: FacetComplex) -> SymMatrix:
    _require_origin(fc)
    i, j, vol, ang = _ridge_terms(fc)
    H = np.zeros((fc.N, fc.N))
    H[i, j] = vol / np.sin(ang)
    H[j, i] = H[i, j]
    cot = vol / np.tan(ang)
    np.add.at(H, (i, i), -cot)
    np.add.at(H, (j, j), -cot)
    return SymMatrix(H)


def build_degree(fc: FacetComplex) -> np.ndarray:
    i, j, vol, ang = _ridge_terms(fc)
    D = np.zeros(fc.N)
    t = vol * np.tan(ang / 2.0)
    np.add.at(D, i, t)
    np.add.at(D, j, t)
    if np.any(D <= 0.0):
        raise DegeneratePolytopeError("facet with zero degree")
    return D


def build_laplacian(fc: FacetComplex) -> SymMatrix:
    i, j, vol, ang = _ridge_terms(fc)
    L = np.zeros((fc.N, fc.N))
    L[i, j] = -vol / np.sin(ang)
    L[j, i] = L[i, j]
    L[np.diag_indices(fc.N)] = -L.sum(axis=1)
    return SymMatrix(L)


def _inv_sqrt(D: np.ndarray, floor: float = TOL.degenerate_d) -> np.ndarray:
    if np.any(D < floor):
        raise DegeneratePolytopeError(f"degree entry below {floor:g}; refusing to regularise")
    return 1.0 / np.sqrt(D)


@dataclass(frozen=True)
class SpectralBundle:
    H: SymMatrix
    D: np.ndarray
    L: SymMatrix
    N: int
    scaled: SymMatrix
    spectrumScaled: Spectrum
    _spectrumH: list = field(default_factory=list, repr=False, compare=False)

    @property
    def spectrumH(self) -> Spectrum:
        """Spectrum of H itself, computed on first use."""
        if not self._spectrumH:
            self._spectrumH.append(eigh(self.H))
        return self._spectrumH[0]

    def identity_residual(self) -> float:
        """max |H + L - diag(D)|."""
        R = np.asarray(self.H) + np.asarray(self.L) - np.diag(self.D)
        return float(np.abs(R).max())


def build_bundle(fc: FacetComplex) -> SpectralBundle:
    H = build_hessian(fc)
    D = build_degree(fc)
    L = build_laplacian(fc)
    s = _inv_sqrt(D)
    scaled = SymMatrix(s[:, None] * np.asarray(H) * s[None, :])
    return SpectralBundle(H, D, L, fc.N, scaled, eigh(scaled))


@dataclass(frozen=True)
class GapCertificate:
    topEigenvalue: float
    secondEigenvalue: float
    topVectorResidual: float
    verdict: bool
    positiveCount: int
    spectrum: np.ndarray = field(repr=False)

    @property
    def status(self) -> str:
        return "pass" if self.verdict else "fail"


def certify_gap(fc_or_bundle, tol=TOL) -> GapCertificate:
    """Check that D^{-1/2} H D^{-1/2} has a single positive eigenvalue, equal to 1,
    with eigenvector D^{1/2} 1."""
    b = fc_or_bundle if isinstance(fc_or_bundle, SpectralBundle) else build_bundle(fc_or_bundle)
    ev = b.spectrumScaled.eigenvalues
    top = float(ev[-1])
    second = float(ev[-2]) if len(ev) > 1 else -np.inf
    # H and the scaled matrix are congruent, so they share their inertia;
    # count positives on the scaled spectrum, threshold relative to its norm
    eps_pos = tol.positive * max(b.scaled.norm_inf(), 1.0)
    positive = int((ev > eps_pos).sum())
    w = np.sqrt(b.D)
    resid = float(np.abs(np.asarray(b.scaled) @ w - w).max() / np.abs(w).max())
    ok = (
        positive == 1
        and abs(top - 1.0) <= tol.top_eigenvalue
        and second <= tol.top_eigenvalue
        and resid <= tol.top_vector
    )
    return GapCertificate(top, second, resid, ok, positive, ev.copy())


# ------------------------------------------------------------------ H-tilde


@dataclass(frozen=True)
class TildeResult:
    status: str  # "pass", "fail", "skipped-non-simple"
    topEigenvalue: Optional[float]
    expected: int
    residual: Optional[float]


def tilde_hessian(P: HPolytope, fc: Optional[FacetComplex] = None) -> np.ndarray:
    """R^{1/2} H R^{1/2} with R = diag(c_i / |F_i|), c_i the normalised slack."""
    if not np.all(P.b > 0):
        raise OriginNotInteriorError("H-polytope (need b > 0)")
    fc = fc or facets_of_hpolytope(P)
    H = np.asarray(build_hessian(fc))
    c = fc.offsets()
    R = c / fc.facet_volumes()
    r = np.sqrt(R)
    return r[:, None] * H * r[None, :]


def tilde_hessian_check(P: HPolytope, simple: Optional[bool] = None,
                        tol: float = TOL.tilde_hessian) -> TildeResult:
    """Top eigenvalue of H-tilde, which should equal d - 1 for simple P."""
    d = P.dim
    if simple is None:
        _, inc = vertices_of_hpolytope(P)
        simple = all(len(x) == d for x in inc)
    if not simple:
        return TildeResult("skipped-non-simple", None, d - 1, None)
    top = float(eigh(tilde_hessian(P)).eigenvalues[-1])
    res = abs(top - (d - 1))
    return TildeResult("pass" if res <= tol else "fail", top, d - 1, res)


class NonMinimalSystemError(GeometryError):
    def __init__(self, index: int):
        super().__init__(f"constraint {index} is redundant; the system is not minimal")
        self.index = index


def redundant_constraints(P: HPolytope, eps: float = 1e-9) -> list[int]:
    """Indices i for which max a_i x over the other constraints stays <= b_i."""
    out = []
    for i in range(P.m):
        A = P.A.copy()
        b = P.b.copy()
        b[i] = b[i] + 1.0
        res = solve_lp(LinearProgram(A, b, P.A[i]))
        if res.optimal and res.value <= P.b[i] + eps * max(1.0, abs(P.b[i])):
            out.append(i)
    return out


@dataclass(frozen=True)
class ProbeResult:
    deltas: tuple
    simpleFraction: tuple
    maxDrift: tuple
    monotone: bool


def perturbation_continuity_probe(P: HPolytope, deltas: Sequence[float] = (1e-2, 5e-3, 2.5e-3, 1.25e-3),
                                  trials: int = 20, seed: int = 0) -> ProbeResult:
    """Drift of H-tilde and simplicity rate under c -> c + delta u, u ~ U[0,1)^m."""
    red = redundant_constraints(P)
    if red:
        raise NonMinimalSystemError(red[0])
    base_fc = facets_of_hpolytope(P)
    base = tilde_hessian(P, base_fc)
    labels = [f.label for f in base_fc.facets]
    fracs, drifts = [], []
    for k, delta in enumerate(deltas):
        st = Stream(seed, 0xD1F7, k)
        n_simple, worst = 0, 0.0
        for _ in range(trials):
            u = st.uniform(P.m)
            Q = P.with_rhs(P.b + delta * u)
            _, inc = vertices_of_hpolytope(Q)
            n_simple += all(len(x) == P.dim for x in inc)
            fc = facets_of_hpolytope(Q)
            if [f.label for f in fc.facets] != labels:
                worst = np.inf
                continue
            worst = max(worst, float(np.abs(tilde_hessian(Q, fc) - base).max()))
        fracs.append(n_simple / trials)
        drifts.append(worst)
    monotone = all(b <= a * (1 + 1e-9) + 1e-15 for a, b in zip(drifts, drifts[1:]))
    return ProbeResult(tuple(deltas), tuple(fracs), tuple(drifts), monotone)


def report(fc: FacetComplex) -> dict:
    b = build_bundle(fc)
    cert = certify_gap(b)
    return {
        "N": fc.N,
        "eigenvaluesH": [float(x) for x in b.spectrumH.eigenvalues],
        "eigenvaluesScaled": [float(x) for x in b.spectrumScaled.eigenvalues],
        "gapCertificate": cert.status,
        "topEigenvalue": cert.topEigenvalue,
        "secondEigenvalue": cert.secondEigenvalue,
        "topVectorResidual": cert.topVectorResidual,
        "identityResidual": b.identity_residual(),
    }
