"""Continuous-time random walk on facets.

The generator is Q = -D^{-1} L: from facet S the walk jumps to an adjacent
facet T at rate |F_ST| csc(theta_ST) / pi(S), where pi(S) = D_SS.  It is
reversible with respect to pi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bounds import SoundnessError, bfs_distances, graph_diameter
from .config import TOL
from .geometry import FacetComplex, surface_area
from .linalg import eigh, uniformized_exp
from .rng import derive_key, derive_keys, uniform_at
from .spectral import SpectralBundle, build_bundle


@dataclass(frozen=True)
class ChainModel:
    Q: np.ndarray
    pi: np.ndarray
    piBar: np.ndarray
    chi2: np.ndarray
    delta: np.ndarray
    jAvg: float
    rates: np.ndarray = field(repr=False)  # total jump rate delta/pi per facet
    cumulative: np.ndarray = field(repr=False)  # row-wise cdf of the jump chain

    @property
    def N(self) -> int:
        return self.pi.size

    @property
    def pi_min(self) -> float:
        return float(self.piBar.min())

    def stationarity_residual(self) -> float:
        return float(np.abs(self.pi @ self.Q).max())


def build_chain(fc: FacetComplex) -> ChainModel:
    i, j, vol, ang = fc.ridge_arrays()
    if np.any((ang <= 0.0) | (ang >= np.pi)):
        raise ValueError("ridge angle at 0 or pi")
    N = fc.N
    W = np.zeros((N, N))
    W[i, j] = W[j, i] = vol / np.sin(ang)
    pi = np.zeros(N)
    chi2 = np.zeros(N)
    for arr, val in ((pi, vol * np.tan(ang / 2.0)), (chi2, vol * ang)):
        np.add.at(arr, i, val)
        np.add.at(arr, j, val)
    delta = W.sum(axis=1)
    Q = W / pi[:, None]
    Q[np.diag_indices(N)] = -delta / pi
    cum = np.cumsum(W / delta[:, None], axis=1)
    cum /= cum[:, -1:]
    return ChainModel(Q, pi, pi / pi.sum(), chi2, delta, float(delta.sum() / pi.sum()), delta / pi, cum)


@dataclass(frozen=True)
class ChainGap:
    eigenvalues: np.ndarray
    gap: float
    verdict: bool


def spectral_gap_of_chain(model: ChainModel, bundle: Optional[SpectralBundle] = None,
                          fc: Optional[FacetComplex] = None, tol: float = TOL.chain_gap) -> ChainGap:
    """Second-smallest eigenvalue of D^{-1/2} L D^{-1/2}; should be >= 1."""
    if bundle is None:
        bundle = build_bundle(fc)
    s = 1.0 / np.sqrt(bundle.D)
    ev = eigh(s[:, None] * np.asarray(bundle.L) * s[None, :]).eigenvalues
    zero_ok = abs(ev[0]) <= tol * max(1.0, abs(ev[-1]))
    gap = float(ev[1]) if ev.size > 1 else math.inf
    return ChainGap(ev, gap, bool(zero_ok and gap >= 1.0 - tol))


# ------------------------------------------------------------------ simulation


@dataclass(frozen=True)
class Trajectory:
    facets: tuple
    holding: tuple
    total_time: float

    @property
    def jumps(self) -> int:
        return len(self.facets) - 1


_STEP = 2  # counters per jump: holding time, next facet


def simulate_batch(model: ChainModel, start, T: float, seed: int, trials: int,
                   first_trial: int = 0, tag: int = 0):
    """Gillespie simulation of ``trials`` independent walks, vectorised.

    Trial ``k`` draws from the stream keyed by ``(seed, tag, first_trial + k)``,
    so results do not depend on how trials are batched.  Returns
    ``(jumps, endpoints)``.
    """
    if T < 0:
        raise ValueError("T must be >= 0")
    keys = derive_keys(seed, tag, last=np.arange(first_trial, first_trial + trials))
    state = np.broadcast_to(np.asarray(start, dtype=np.intp), (trials,)).copy()
    t = np.zeros(trials)
    jumps = np.zeros(trials, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    while active.any():
        idx = np.nonzero(active)[0]
        c = (jumps[idx] * _STEP).astype(np.uint64)
        u1 = uniform_at(keys[idx], c)
        u2 = uniform_at(keys[idx], c + np.uint64(1))
        s = state[idx]
        t_new = t[idx] - np.log1p(-u1) / model.rates[s]
        stop = t_new > T
        go = idx[~stop]
        active[idx[stop]] = False
        if go.size:
            sg = state[go]
            nxt = (model.cumulative[sg] <= u2[~stop][:, None]).sum(axis=1)
            state[go] = np.minimum(nxt, model.N - 1)
            t[go] = t_new[~stop]
            jumps[go] += 1
    return jumps, state


def simulate(model: ChainModel, start: int, T: float, seed: int, trial: int = 0, tag: int = 0) -> Trajectory:
    """One trajectory; identical to trial ``trial`` of :func:`simulate_batch`."""
    if T < 0:
        raise ValueError("T must be >= 0")
    key = derive_key(seed, tag, trial)
    facets = [int(start)]
    holding = []
    t = 0.0
    k = 0
    while True:
        s = facets[-1]
        u1 = float(uniform_at(key, np.uint64(k * _STEP)))
        u2 = float(uniform_at(key, np.uint64(k * _STEP + 1)))
        t_new = t - math.log1p(-u1) / model.rates[s]
        if t_new > T:
            holding.append(T - t)
            break
        holding.append(t_new - t)
        nxt = int((model.cumulative[s] <= u2).sum())
        facets.append(min(nxt, model.N - 1))
        t = t_new
        k += 1
    return Trajectory(tuple(facets), tuple(holding), float(T))


def end_state_frequencies(model: ChainModel, start: int, T: float, seed: int, trials: int) -> np.ndarray:
    _, ends = simulate_batch(model, start, T, seed, trials)
    return np.bincount(ends, minlength=model.N) / trials


# ------------------------------------------------------------------ mixing


@dataclass(frozen=True)
class MixingResult:
    t: float
    tv: float
    warmness: float
    tau: float

    @property
    def ok(self) -> bool:
        return self.tv <= self.tau


def symmetrized_spectrum(model: ChainModel):
    """Eigenpairs of S = Pi^{1/2} Q Pi^{-1/2}, symmetric because the chain is reversible."""
    s = np.sqrt(model.piBar)
    S = s[:, None] * model.Q / s[None, :]
    return eigh(0.5 * (S + S.T))


def reversible_exp(model: ChainModel, p, t: float, spectrum=None) -> np.ndarray:
    """p exp(tQ) through the symmetrized generator; rows of p are propagated together."""
    spec = spectrum or symmetrized_spectrum(model)
    s = np.sqrt(model.piBar)
    V = spec.eigenvectors
    lam = np.minimum(spec.eigenvalues, 0.0)
    P = np.atleast_2d(np.asarray(p, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), (P.shape[0],))
    C = (P / s) @ V * np.exp(np.outer(t, lam))
    out = (C @ V.T) * s
    return out if np.ndim(p) > 1 else out[0]


# work cap for uniformization before switching to the spectral route
_UNIFORMIZATION_STEPS = 20_000


def _mixing_time(model: ChainModel, p: np.ndarray, tau: float) -> tuple[float, float]:
    M = float(np.max(p / model.piBar))
    t = max(0.0, 2.0 * math.log(M / tau))
    if np.allclose(p, model.piBar, rtol=0, atol=1e-15):
        t = 0.0
    return t, M


def mixing_check(model: ChainModel, p, tau: float, spectrum=None) -> MixingResult:
    """TV distance to stationarity after t = 2 log(M / tau), M the warmness of p.

    Uses uniformization unless the uniformized chain would need more than
    ``_UNIFORMIZATION_STEPS`` steps (stiff rates), then the eigendecomposition.
    """
    p = np.asarray(p, dtype=float)
    t, M = _mixing_time(model, p, tau)
    if spectrum is None and model.rates.max() * t <= _UNIFORMIZATION_STEPS:
        q = uniformized_exp(model.Q, p, t)
    else:
        q = reversible_exp(model, p, t, spectrum)
    tv = 0.5 * float(np.abs(q - model.piBar).sum())
    return MixingResult(t, tv, M, tau)


def point_mass_mixing(model: ChainModel, tau: float) -> list[MixingResult]:
    """mixing_check from every facet, sharing one eigendecomposition."""
    P = np.eye(model.N)
    times = [_mixing_time(model, row, tau) for row in P]
    Qt = reversible_exp(model, P, np.array([t for t, _ in times]))
    tv = 0.5 * np.abs(Qt - model.piBar).sum(axis=1)
    return [MixingResult(t, float(v), M, tau) for (t, M), v in zip(times, tv)]


# ------------------------------------------------------------------ giant component


@dataclass(frozen=True)
class GiantComponentResult:
    source: int
    G: tuple
    piMass: float
    chi2Mass: float
    bfsDiameterOfG: int
    pathLengthCutoff: float
    horizon: float
    meanJumps: float
    trials: int
    phi: float
    jumps: np.ndarray = field(repr=False)
    endpoints: np.ndarray = field(repr=False)

    @property
    def certifiedDiameterBound(self) -> float:
        return 2.0 * self.pathLengthCutoff


class EmptyGiantComponentError(RuntimeError):
    pass


def choose_source(model: ChainModel, T: float, seed: int, trials_per_facet: int):
    """Lowest-index facet whose estimated E[J^T] is at most the stationary average T J_avg.

    Such a facet exists because the pi-bar-weighted average of E[J_F^T] is
    exactly T J_avg.  If sampling noise hides every candidate, the facet with
    the smallest standardised excess is used.
    """
    target = T * model.jAvg
    n = trials_per_facet
    starts = np.repeat(np.arange(model.N), n)
    jumps, _ = simulate_batch(model, starts, T, seed, starts.size, tag=1)
    J = jumps.reshape(model.N, n).astype(float)
    means = J.mean(axis=1)
    ses = J.std(axis=1, ddof=1) / math.sqrt(n) if n > 1 else np.zeros(model.N)
    ok = np.nonzero(means <= target)[0]
    if ok.size:
        return int(ok[0]), means, ses
    z = (means - target) / np.maximum(ses, 1e-300)
    return int(np.argmin(z)), means, ses


def giant_component(fc: FacetComplex, phi: float, trials: int, seed: int,
                    horizon: Optional[float] = None, threshold: float = 2.0,
                    source_trials: Optional[int] = None,
                    model: Optional[ChainModel] = None) -> GiantComponentResult:
    """Endpoints of short trajectories from a well-behaved source facet.

    ``threshold`` is the Markov-inequality multiplier: trajectories with more
    than ``threshold * mean / phi`` jumps are discarded.
    """
    if not 0.0 < phi < 1.0:
        raise ValueError("phi must lie in (0, 1)")
    if trials < 1:
        raise ValueError("trials must be positive")
    model = model or build_chain(fc)
    T = horizon if horizon is not None else 2.0 * math.log(2.0 / model.pi_min)
    src_trials = source_trials or max(100, min(2000, trials // 4))
    F0, _, _ = choose_source(model, T, seed, src_trials)
    jumps, ends = simulate_batch(model, F0, T, seed, trials, tag=0)
    mean = float(jumps.mean())
    cutoff = threshold * mean / phi
    keep = jumps <= cutoff
    if not keep.any():
        raise EmptyGiantComponentError(f"no trajectory within the cutoff; try trials >= {10 * trials}")
    G = tuple(int(g) for g in np.unique(ends[keep]))
    pi_mass = float(model.piBar[list(G)].sum())
    chi2_mass = float(model.chi2[list(G)].sum() / model.chi2.sum())
    # soundness: each element of G was reached by a walk of <= cutoff jumps
    dist = bfs_distances(fc.adjacency, F0)
    if any(dist[g] > cutoff for g in G):
        raise SoundnessError("facet in G farther from the source than the cutoff")
    diamG = max(max(bfs_distances(fc.adjacency, g)[h] for h in G) for g in G)
    if diamG > 2.0 * cutoff:
        raise SoundnessError("diameter of G exceeds twice the cutoff")
    return GiantComponentResult(F0, G, pi_mass, chi2_mass, diamG, cutoff, T, mean, trials, phi, jumps, ends)


def mass_lower_limit(phi: float, trials: int) -> float:
    """1 - phi - 3 binomial standard errors."""
    p = 1.0 - phi
    return p - 3.0 * math.sqrt(p * (1.0 - p) / trials)


# ------------------------------------------------------------------ non-degeneracy


@dataclass(frozen=True)
class NondegeneracyReport:
    piMinActual: float
    logPiMinBound: float
    surfaceRatio: float
    chi2PiRatios: np.ndarray
    regimeHolds: bool
    flaggedFacets: tuple
    chi2HalfLePi: bool

    @property
    def piMinBound(self) -> float:
        return math.exp(self.logPiMinBound)


def nondegeneracy_report(fc: FacetComplex, r: float, model: Optional[ChainModel] = None) -> NondegeneracyReport:
    """Minimum stationary mass vs the worst-case bound m^{-2d^2} r^2 / d^3,
    pi(Omega) / surface area, and chi2/pi per facet.

    The angle regime is pi - theta >= r / R on every ridge (R the largest
    vertex norm); facets touching a ridge outside it are flagged.
    """
    model = model or build_chain(fc)
    d = fc.dim
    m = len(fc.vertex_indices())
    log_bound = -2.0 * d * d * math.log(m) + 2.0 * math.log(r) - 3.0 * math.log(d)
    ratios = model.chi2 / model.pi
    R = float(np.linalg.norm(fc.points[fc.vertex_indices()], axis=1).max())
    i, j, _, ang = fc.ridge_arrays()
    bad = (np.pi - ang) < r / R
    flagged = tuple(sorted(set(i[bad].tolist()) | set(j[bad].tolist())))
    holds = not bad.any()
    ok = bool(np.all(model.chi2 / 2.0 <= model.pi * (1 + 1e-12)))
    if holds and not ok:
        raise SoundnessError("chi2/2 > pi on a facet inside the angle regime")
    return NondegeneracyReport(model.pi_min, log_bound, float(model.pi.sum() / surface_area(fc)),
                               ratios, holds, flagged, ok)


__all__ = [
    "ChainModel", "ChainGap", "Trajectory", "MixingResult", "GiantComponentResult",
    "NondegeneracyReport", "EmptyGiantComponentError", "build_chain", "spectral_gap_of_chain",
    "simulate", "simulate_batch", "end_state_frequencies", "mixing_check", "point_mass_mixing",
    "reversible_exp", "symmetrized_spectrum", "choose_source",
    "giant_component", "mass_lower_limit", "nondegeneracy_report", "graph_diameter",
]
