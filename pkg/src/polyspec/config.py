"""Numerical tolerances shared by every module.

All comparisons in the toolkit read their thresholds from a single
:class:`Tolerances` record so a run can be re-executed with overrides
(``--tol`` on the command line) without touching module code.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    absolute: float = 1e-9
    relative: float = 1e-10
    # side tests in facet enumeration, relative to the largest point norm
    side: float = 1e-9
    # eigenpair residual certified by eigh
    eig_residual: float = 1e-10
    # "one positive eigenvalue" threshold, scaled by ||H||_inf
    positive: float = 1e-8
    top_eigenvalue: float = 1e-8
    top_vector: float = 1e-7
    chain_gap: float = 1e-8
    stationarity: float = 1e-9
    tilde_hessian: float = 1e-6
    uniformization: float = 1e-13
    degenerate_d: float = 1e-12

    def with_overrides(self, **kw: float) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(kw) - known
        if bad:
            raise KeyError(f"unknown tolerance field(s): {sorted(bad)}")
        return replace(self, **kw)


TOL = Tolerances()
