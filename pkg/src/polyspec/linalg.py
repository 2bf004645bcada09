"""Dense numerical kernels: Jacobi eigensolver, simplex LP, simplex volumes,
Chebyshev polynomials and uniformization of CTMC semigroups."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .config import TOL


class NumericalError(RuntimeError):
    """An iterative kernel failed to reach its certified tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class SymMatrix:
    """Dense symmetric matrix; the stored entries are exactly symmetric."""

    __slots__ = ("entries",)

    def __init__(self, entries, check: bool = True):
        a = np.array(entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if check:
            scale = max(1.0, float(np.abs(a).max(initial=0.0)))
            asym = float(np.abs(a - a.T).max(initial=0.0))
            if asym > 1e-9 * scale:
                raise ValueError(f"matrix is not symmetric (max |a_ij - a_ji| = {asym:.3e})")
        upper = np.triu(a)
        self.entries = upper + np.triu(a, 1).T
        self.entries.setflags(write=False)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def norm_inf(self) -> float:
        return float(np.abs(self.entries).sum(axis=1).max(initial=0.0))

    def __repr__(self) -> str:
        return f"SymMatrix(n={self.n})"


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, orthonormal

    def top(self) -> tuple[float, np.ndarray]:
        return float(self.eigenvalues[-1]), self.eigenvectors[:, -1]

    def __len__(self) -> int:
        return len(self.eigenvalues)


def _as_array(m) -> np.ndarray:
    if isinstance(m, SymMatrix):
        return np.array(m.entries)
    a = np.array(m, dtype=float)
    return 0.5 * (a + a.T)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint index pairs covering every (p, q) once per sweep."""
    players = list(range(n + (n % 2)))
    half = len(players) // 2
    rounds = []
    for _ in range(len(players) - 1):
        top, bot = players[:half], players[half:][::-1]
        pairs = [(min(a, b), max(a, b)) for a, b in zip(top, bot) if a < n and b < n]
        if pairs:
            p, q = zip(*pairs)
            rounds.append((np.array(p), np.array(q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def eigh(m, max_sweeps: int = 100, tol: float = TOL.eig_residual) -> Spectrum:
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Each sweep visits every off-diagonal pair once; pairs are grouped into
    disjoint rounds so a whole round is applied as one vectorised update.
    The result is certified by its residual ``||M v - lam v||_inf``.
    """
    a0 = _as_array(m)
    n = a0.shape[0]
    if n == 0:
        raise ValueError("eigh needs n >= 1")
    a = a0.copy()
    v = np.eye(n)
    scale = float(np.linalg.norm(a0))
    if n > 1 and scale > 0.0:
        rounds = _round_robin(n)
        for _sweep in range(max_sweeps):
            off = float(np.linalg.norm(a - np.diag(np.diag(a))))
            if off <= 1e-15 * scale:
                break
            for p, q in rounds:
                apq = a[p, q]
                active = np.abs(apq) > 1e-20 * scale
                if not active.any():
                    continue
                p, q, apq = p[active], q[active], apq[active]
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
                t[theta == 0.0] = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = ap * c - aq * s
                a[:, q] = ap * s + aq * c
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = ap * c[:, None] - aq * s[:, None]
                a[q, :] = ap * s[:, None] + aq * c[:, None]
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = vp * c - vq * s
                v[:, q] = vp * s + vq * c
        else:
            off = float(np.linalg.norm(a - np.diag(np.diag(a))))
            raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps", off / scale)
    lam = np.diag(a).copy()
    order = np.argsort(lam, kind="stable")
    lam, v = lam[order], v[:, order]
    norm_inf = float(np.abs(a0).sum(axis=1).max())
    if norm_inf > 0.0:
        resid = float(np.abs(a0 @ v - v * lam).max()) / norm_inf
        if resid > tol:
            raise NumericalError("eigenpair residual above tolerance", resid)
    return Spectrum(lam, v)


# ---------------------------------------------------------------- LP


@dataclass
class LinearProgram:
    """Optimise ``c.x`` subject to ``A x <= b`` (and optionally ``A_eq x = b_eq``).

    Variables are free unless ``nonneg`` is set.
    """

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    sense: str = "max"
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    nonneg: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.shape[0] != self.b.size:
            raise ValueError("row count of A must equal length of b")
        if self.A_eq is not None:
            self.A_eq = np.asarray(self.A_eq, dtype=float).reshape(-1, n)
            self.b_eq = np.asarray(self.b_eq, dtype=float).ravel()
            if self.A_eq.shape[0] != self.b_eq.size:
                raise ValueError("row count of A_eq must equal length of b_eq")
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        for arr in (self.A, self.b, self.c):
            if not np.all(np.isfinite(arr)):
                raise ValueError("LP data must be finite")


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: float = float("nan")
    x: Optional[np.ndarray] = None
    reduced_costs: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _simplex(T: np.ndarray, basis: list[int], ncols: int, eps: float, max_iter: int) -> str:
    """Bland's-rule primal simplex on tableau T (last row = reduced costs, minimisation)."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        red = T[-1, :ncols]
        candidates = np.nonzero(red < -eps)[0]
        if candidates.size == 0:
            return "optimal"
        j = int(candidates[0])
        col = T[:m, j]
        pos = col > eps
        if not pos.any():
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / col[pos]
        best = ratios.min()
        ties = np.nonzero(ratios <= best + eps * max(1.0, abs(best)))[0]
        r = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, r, j)
        basis[r] = j
    raise NumericalError("simplex iteration cap reached")


def solve_lp(lp: LinearProgram, eps: float = 1e-11, max_iter: int = 50_000) -> LPResult:
    """Two-phase tableau simplex with Bland's anti-cycling rule."""
    n = lp.c.size
    A_ub, b_ub = lp.A, lp.b
    A_eq = lp.A_eq if lp.A_eq is not None else np.zeros((0, n))
    b_eq = lp.b_eq if lp.b_eq is not None else np.zeros(0)
    cost = -lp.c if lp.sense == "max" else lp.c.copy()
    if not lp.nonneg:
        A_ub = np.hstack([A_ub, -A_ub])
        A_eq = np.hstack([A_eq, -A_eq])
        cost = np.concatenate([cost, -cost])
    nv = A_ub.shape[1]
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq
    scale = max(1.0, float(np.abs(A_ub).max(initial=0.0)), float(np.abs(A_eq).max(initial=0.0)))

    rows = np.zeros((m, nv + m_ub))
    rhs = np.concatenate([b_ub, b_eq]).astype(float)
    rows[:m_ub, :nv] = A_ub
    rows[m_ub:, :nv] = A_eq
    rows[np.arange(m_ub), nv + np.arange(m_ub)] = 1.0
    neg = rhs < 0
    rows[neg] *= -1.0
    rhs[neg] *= -1.0

    basis: list[int] = [-1] * m
    need_art = []
    for i in range(m):
        if i < m_ub and not neg[i]:
            basis[i] = nv + i
        else:
            need_art.append(i)
    n_real = nv + m_ub
    ncols = n_real + len(need_art)
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :n_real] = rows
    T[:m, -1] = rhs
    for k, i in enumerate(need_art):
        T[i, n_real + k] = 1.0
        basis[i] = n_real + k

    tol_feas = 1e-9 * max(1.0, float(np.abs(rhs).max(initial=0.0)))
    if need_art:
        T[-1, n_real:ncols] = 1.0
        for i in need_art:
            T[-1] -= T[i]
        _simplex(T, basis, ncols, eps * scale, max_iter)
        if -T[-1, -1] > tol_feas:
            return LPResult("infeasible")
        # drive remaining artificials out of the basis
        keep = []
        for i in range(m):
            if basis[i] >= n_real:
                nz = np.nonzero(np.abs(T[i, :n_real]) > 1e-9)[0]
                if nz.size:
                    _pivot(T, i, int(nz[0]))
                    basis[i] = int(nz[0])
                    keep.append(i)
            else:
                keep.append(i)
        T = np.vstack([T[keep], T[-1:]])
        basis = [basis[i] for i in keep]
        T = np.delete(T, np.s_[n_real:ncols], axis=1)
        ncols = n_real
    m = T.shape[0] - 1

    T[-1, :] = 0.0
    T[-1, :nv] = cost
    for i, bi in enumerate(basis):
        if T[-1, bi] != 0.0:
            T[-1] -= T[-1, bi] * T[i]
    status = _simplex(T, basis, ncols, eps * scale, max_iter)
    if status == "unbounded":
        return LPResult("unbounded")
    z = np.zeros(ncols)
    for i, bi in enumerate(basis):
        z[bi] = T[i, -1]
    x = z[:nv]
    if not lp.nonneg:
        x = x[:n] - x[n:]
    value = float(lp.c @ x)
    return LPResult("optimal", value, x, T[-1, :ncols].copy())


# ---------------------------------------------------------------- geometry kernels


def gram_volume(points) -> float:
    """k-volume of the simplex on k+1 points: sqrt(det(M^T M)) / k!."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    k = p.shape[0] - 1
    if k < 0:
        raise ValueError("need at least one point")
    if k == 0:
        return 1.0
    if k > p.shape[1]:
        return 0.0
    M = (p[1:] - p[0]).T
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= 1e-12 * max(1.0, sv[0]):
        return 0.0
    return float(np.prod(sv)) / math.factorial(k)


def chebyshev_T(k: int, x):
    """Chebyshev polynomial of the first kind via the three-term recurrence.

    ``x`` may be a scalar or a square matrix (then ``T_k(x)`` is the matrix
    polynomial).
    """
    if k < 0:
        raise ValueError("degree must be >= 0")
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        t0, t1 = np.eye(x.shape[0]), x.copy()
        mul = lambda a, b: a @ b  # noqa: E731
    else:
        t0, t1 = np.ones_like(x), x.copy()
        mul = lambda a, b: a * b  # noqa: E731
    if k == 0:
        return t0 if x.ndim else float(t0)
    for _ in range(k - 1):
        t0, t1 = t1, 2.0 * mul(x, t1) - t0
    return t1 if x.ndim else float(t1)


def poisson_weights(rate: float, tol: float = TOL.uniformization) -> np.ndarray:
    """Poisson(rate) pmf on 0..K with the mass beyond K below ``tol``."""
    if rate <= 0.0:
        return np.ones(1)
    K = int(math.ceil(rate + 12.0 * math.sqrt(rate) + 40.0))
    while True:
        ks = np.arange(K + 1)
        w = np.exp(-rate + ks * math.log(rate) - gammaln(ks + 1))
        if 1.0 - w.sum() < tol:
            return w
        K *= 2


def uniformized_exp(Q, p, t: float, tol: float = TOL.uniformization) -> np.ndarray:
    """Evaluate ``p exp(tQ)`` for a CTMC generator by uniformization."""
    Q = np.asarray(Q, dtype=float)
    p = np.asarray(p, dtype=float)
    if t < 0:
        raise ValueError("t must be >= 0")
    if t == 0.0:
        return p.copy()
    lam = float(np.max(-np.diag(Q)))
    if lam <= 0.0:
        return p.copy()
    P = np.eye(Q.shape[0]) + Q / lam
    w = poisson_weights(lam * t, tol)
    out = np.zeros_like(p)
    cur = p.copy()
    for wk in w:
        out += wk * cur
        cur = cur @ P
    np.clip(out, 0.0, None, out=out)
    return out
