"""Command-line harness: ``polyspec <subcommand> ...``.

Single-run reports are JSON on stdout (or ``--out``); sweeps are CSV.  Output
depends only on the configuration, so reruns are byte-identical; wall time
and assertion tallies go to the optional ``--manifest`` file.

Exit codes: 0 ok, 1 usage or input error, 2 soundness failure, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import SoundnessError, diameter_report, worst_case_estimates
from .chain import build_chain, giant_component, mass_lower_limit, mixing_check, spectral_gap_of_chain
from .config import TOL, Tolerances
from .geometry import (
    FacetComplex,
    GeometryError,
    HPolytope,
    VPolytope,
    facets_of_hpolytope,
    generate,
    load_polytope,
    random_integral_hpolytope,
)
from .linalg import NumericalError
from .smoothed import (
    EndToEndReport,
    end_to_end_theorem12,
    facet_complex_any,
    quadrature_perimeter_estimate,
    sphere_base,
    steiner_validate,
)
from .spectral import build_bundle, certify_gap

EXIT_OK, EXIT_USAGE, EXIT_SOUNDNESS, EXIT_NUMERICAL = 0, 1, 2, 3
STOCHASTIC = {"chain", "smoothed", "quadrature", "steiner"}


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    subcommand: str
    polytope: Optional[str] = None
    generator: Optional[str] = None
    seed: Optional[int] = None
    out: Optional[str] = None
    manifest: Optional[str] = None
    tol: dict = field(default_factory=dict)
    sigma: Optional[float] = None
    phi: Optional[float] = None
    trials: Optional[int] = None
    planes: Optional[int] = None
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        bad = set(obj) - known
        if bad:
            raise UsageError(f"unknown config field(s): {sorted(bad)}")
        return cls(**obj)

    def tolerances(self) -> Tolerances:
        try:
            return TOL.with_overrides(**self.tol)
        except KeyError as exc:
            raise UsageError(str(exc)) from None


@dataclass
class RunManifest:
    config: dict
    version: str
    wallTime: float = 0.0
    assertions: list = field(default_factory=list)

    def check(self, name: str, passed: bool) -> bool:
        self.assertions.append({"name": name, "passed": bool(passed)})
        return bool(passed)

    @property
    def failures(self) -> int:
        return sum(not a["passed"] for a in self.assertions)


# ------------------------------------------------------------------ helpers


def _clean(x):
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=1) + "\n"


def _load(cfg: ExperimentConfig):
    if cfg.polytope and cfg.generator:
        raise UsageError("give either --polytope or --generator, not both")
    if cfg.polytope:
        return load_polytope(cfg.polytope)
    if cfg.generator:
        return generate(cfg.generator)
    raise UsageError("a polytope is required (--polytope FILE or --generator NAME)")


def _complex(X) -> FacetComplex:
    if isinstance(X, HPolytope):
        return facets_of_hpolytope(X)
    return facet_complex_any(X)


def _require_seed(cfg: ExperimentConfig):
    if cfg.seed is None:
        raise UsageError(f"--seed is required for '{cfg.subcommand}'")


def _positive(name: str, value, allow_zero: bool = False):
    if value is None:
        return
    if value < 0 or (value == 0 and not allow_zero):
        raise UsageError(f"--{name} must be {'non-negative' if allow_zero else 'positive'}")


def _emit(text: str, cfg: ExperimentConfig, stdout):
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else _clean(v) for v in r])
    return buf.getvalue()


# ------------------------------------------------------------------ subcommands


def cmd_analyze(cfg: ExperimentConfig, man: RunManifest, stdout) -> None:
    fc = _complex(_load(cfg))
    b = build_bundle(fc)
    cert = certify_gap(b, cfg.tolerances())
    model = build_chain(fc)
    gap = spectral_gap_of_chain(model, b)
    man.check("gap_certificate", cert.verdict)
    man.check("chain_gap_at_least_one", gap.verdict)
    man.check("stationarity", model.stationarity_residual() <= 1e-9 * np.abs(model.Q).sum(axis=1).max())
    report = {
        "N": fc.N,
        "ridges": len(fc.ridges),
        "simplicial": fc.simplicial,
        "eigenvaluesH": b.spectrumH.eigenvalues,
        "eigenvaluesScaled": b.spectrumScaled.eigenvalues,
        "identityResidual": b.identity_residual(),
        "certificate": {
            "verdict": cert.status,
            "topEigenvalue": cert.topEigenvalue,
            "secondEigenvalue": cert.secondEigenvalue,
            "topVectorResidual": cert.topVectorResidual,
            "positiveCount": cert.positiveCount,
        },
        "chain": {
            "jAvg": model.jAvg,
            "piMin": model.pi_min,
            "stationarityResidual": model.stationarity_residual(),
            "gap": gap.gap,
            "laplacianEigenvalues": gap.eigenvalues,
        },
    }
    _emit(_dumps(report), cfg, stdout)


BOUND_COLUMNS = ("seed", "d", "m", "N", "exactDiameter", "chebyshevCertified", "chebyshevApriori",
                 "theorem44Bound", "theorem11Bound", "theorem11Explicit", "sound", "enveloped")


def cmd_bound(cfg: ExperimentConfig, man: RunManifest, stdout) -> None:
    corpus = cfg.params.get("corpus")
    if corpus:
        _require_seed(cfg)
        rows = []
        for k in range(int(corpus)):
            s = cfg.seed + k
            P = random_integral_hpolytope(2 + k % 3, s)
            rep = diameter_report(P, check=False)
            env = worst_case_estimates(P).enveloped
            ok = man.check(f"soundness[{s}]", rep.sound())
            man.check(f"envelope[{s}]", env)
            rows.append([s, P.dim, P.m, rep.N, rep.exactDiameter, rep.chebyshevCertified,
                         rep.chebyshevApriori, rep.theorem44Bound, rep.theorem11Bound,
                         rep.theorem11Explicit, ok, env])
        _emit(_csv(BOUND_COLUMNS, rows), cfg, stdout)
        return
    X = _load(cfg)
    rep = diameter_report(X, check=False)
    man.check("soundness", rep.sound())
    out = rep.as_dict()
    if isinstance(X, HPolytope) and np.all(np.mod(X.A, 1) == 0) and np.all(np.mod(X.b, 1) == 0):
        w = worst_case_estimates(X)
        man.check("envelope", w.enveloped)
        out["worstCase"] = asdict(w)
    _emit(_dumps(out), cfg, stdout)


def cmd_chain(cfg: ExperimentConfig, man: RunManifest, stdout) -> None:
    _require_seed(cfg)
    phi = 0.25 if cfg.phi is None else cfg.phi
    trials = 2000 if cfg.trials is None else cfg.trials
    _positive("trials", trials)
    if not 0 < phi < 1:
        raise UsageError("--phi must lie in (0, 1)")
    fc = _complex(_load(cfg))
    model = build_chain(fc)
    res = giant_component(fc, phi, trials, cfg.seed, horizon=cfg.params.get("horizon"),
                          threshold=cfg.params.get("threshold", 2.0), model=model)
    limit = mass_lower_limit(phi, trials)
    man.check("pi_mass", res.piMass >= limit)
    man.check("diameter_of_G", res.bfsDiameterOfG <= res.certifiedDiameterBound)
    summary = {
        "source": res.source,
        "G": res.G,
        "piMass": res.piMass,
        "piMassLimit": limit,
        "chi2Mass": res.chi2Mass,
        "bfsDiameterOfG": res.bfsDiameterOfG,
        "pathLengthCutoff": res.pathLengthCutoff,
        "certifiedDiameterBound": res.certifiedDiameterBound,
        "horizon": res.horizon,
        "meanJumps": res.meanJumps,
        "jAvg": model.jAvg,
    }
    table = _csv(("trial", "jumps", "endpoint"),
                 [[k, int(j), int(e)] for k, (j, e) in enumerate(zip(res.jumps, res.endpoints))])
    if cfg.out:
        Path(cfg.out).write_text(table)
        stdout.write(_dumps(summary))
    else:
        stdout.write(_dumps(summary))
        stdout.write(table)


def cmd_smoothed(cfg: ExperimentConfig, man: RunManifest, stdout) -> None:
    _require_seed(cfg)
    trials = 2000 if cfg.trials is None else cfg.trials
    _positive("trials", trials)
    sigma = 0.1 if cfg.sigma is None else cfg.sigma
    _positive("sigma", sigma, allow_zero=True)
    phi = 0.25 if cfg.phi is None else cfg.phi
    planes = 0 if cfg.planes is None else cfg.planes
    _positive("planes", planes, allow_zero=True)
    seeds = int(cfg.params.get("seeds", 1))
    exponent = float(cfg.params.get("split_exponent", 8))
    base_spec = cfg.params.get("base") or "sphere:m=30,d=3"
    rows = []
    for k in range(seeds):
        s = cfg.seed + k
        base = _base_points(base_spec, s)
        rep = end_to_end_theorem12(base, sigma, phi, s, trials, exponent=exponent, planes=planes)
        man.check(f"pi_mass[{s}]", rep.piMassG >= rep.piMassLimit)
        man.check(f"diameter_of_G[{s}]", rep.diamG <= rep.certifiedCutoff)
        rows.append(rep.csv_row())
    _emit(_csv(EndToEndReport.CSV_COLUMNS, rows), cfg, stdout)


def _base_points(spec: str, seed: int) -> np.ndarray:
    """Base points from a file or generator, scaled into the unit ball."""
    if Path(spec).is_file():
        X = load_polytope(spec)
        if not isinstance(X, VPolytope):
            raise UsageError("--base must be a V-polytope")
        pts = X.points
    else:
        name, _, args = spec.partition(":")
        if name == "sphere":
            kw = dict(item.split("=") for item in filter(None, args.split(",")))
            pts = sphere_base(int(kw.get("m", 30)), int(kw.get("d", 3)), seed)
        else:
            X = generate(spec)
            if not isinstance(X, VPolytope):
                raise UsageError("--base must be a V-polytope generator")
            pts = X.points
    return pts / max(1.0, float(np.linalg.norm(pts, axis=1).max()))


def cmd_quadrature(cfg: ExperimentConfig, man: RunManifest, stdout) -> None:
    _require_seed(cfg)
    planes = 10_000 if cfg.planes is None else cfg.planes
    _positive("planes", planes)
    fc = _complex(_load(cfg))
    q = quadrature_perimeter_estimate(fc, planes, cfg.seed, eta=float(cfg.params.get("eta", 0.25)))
    man.check("quadrature_within_3se", abs(q.z) <= 3.0)
    man.check("no_multi_hits", q.multiHits == 0)
    _emit(_dumps({
        "planes": q.planeSamples, "estimate": q.estimate, "stderr": q.stderr, "exact": q.exact,
        "ratio": q.ratio, "z": q.z, "shadowVertexMean": q.shadowVertexMean,
        "effectiveSampleSize": q.effectiveSampleSize, "rejected": q.rejected,
        "ridgeHits": q.hitCounts, "flagged": q.flagged,
    }), cfg, stdout)


def cmd_steiner(cfg: ExperimentConfig, man: RunManifest, stdout) -> None:
    _require_seed(cfg)
    eps = cfg.params.get("eps") or [0.1]
    points = int(cfg.params.get("mc_points", 1_000_000))
    _positive("mc-points", points)
    fc = _complex(_load(cfg))
    chk = steiner_validate(fc, eps, points, cfg.seed)
    man.check("steiner_within_3se", chk.within(3.0))
    c = chk.coefficients
    _emit(_dumps({
        "volume": c.volume, "surface": c.surface, "second": c.second, "ballVolume": c.ballVolume,
        "eps": chk.eps, "exact": chk.exact, "monteCarlo": chk.mc, "stderr": chk.stderr,
        "fitted": chk.fitted, "fittedStderr": chk.fittedStderr, "illConditioned": chk.illConditioned,
        "quermass": c.quermass_d3() if c.dim == 3 else None,
    }), cfg, stdout)


COMMANDS = {
    "analyze": cmd_analyze,
    "bound": cmd_bound,
    "chain": cmd_chain,
    "smoothed": cmd_smoothed,
    "quadrature": cmd_quadrature,
    "steiner": cmd_steiner,
}


# ------------------------------------------------------------------ parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tol_pair(text: str):
    k, eq, v = text.partition("=")
    if not eq:
        raise argparse.ArgumentTypeError("expected FIELD=VALUE")
    try:
        return k.strip(), float(v)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {v!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="polyspec", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    def common(sp, polytope=True):
        if polytope:
            sp.add_argument("--polytope", metavar="FILE", help="JSON polytope file")
            sp.add_argument("--generator", metavar="SPEC", help="e.g. cube:d=3, sphere:m=20,d=3,seed=1")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", metavar="FILE")
        sp.add_argument("--manifest", metavar="FILE", help="write run manifest (includes wall time)")
        sp.add_argument("--tol", type=_tol_pair, action="append", default=[], metavar="FIELD=VALUE")
        return sp

    common(sub.add_parser("analyze", help="spectral certificates and chain summary"))
    b = common(sub.add_parser("bound", help="diameter bounds vs exact BFS diameter"))
    b.add_argument("--corpus", type=int, help="sweep N random integral polytopes (CSV)")
    c = common(sub.add_parser("chain", help="giant-component procedure"))
    c.add_argument("--phi", type=float)
    c.add_argument("--trials", type=int)
    c.add_argument("--horizon-override", type=float, dest="horizon")
    c.add_argument("--threshold", type=float, default=2.0)
    s = common(sub.add_parser("smoothed", help="end-to-end smoothed pipeline (CSV)"), polytope=False)
    s.add_argument("--base", default="sphere:m=30,d=3", help="FILE or generator for base points")
    s.add_argument("--sigma", type=float)
    s.add_argument("--split-exponent", type=float, default=8.0)
    s.add_argument("--phi", type=float)
    s.add_argument("--planes", type=int)
    s.add_argument("--trials", type=int)
    s.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    q = common(sub.add_parser("quadrature", help="plane-quadrature perimeter estimate"))
    q.add_argument("--planes", type=int)
    q.add_argument("--eta", type=float, default=0.25)
    st = common(sub.add_parser("steiner", help="Steiner formula vs Monte Carlo"))
    st.add_argument("--eps", type=float, action="append")
    st.add_argument("--mc-points", type=int, default=1_000_000)
    return p


_CORE = {"subcommand", "polytope", "generator", "seed", "out", "manifest", "tol", "sigma", "phi",
         "trials", "planes"}


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    d = vars(ns).copy()
    d["tol"] = dict(d.get("tol") or [])
    core = {k: v for k, v in d.items() if k in _CORE}
    params = {k: v for k, v in d.items() if k not in _CORE and v is not None}
    return ExperimentConfig.from_dict({**core, "params": params})


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ns = build_parser().parse_args(argv)
    start = time.perf_counter()
    man = None
    try:
        cfg = config_from_args(ns)
        cfg.tolerances()
        man = RunManifest(_clean(asdict(cfg)), __version__)
        COMMANDS[cfg.subcommand](cfg, man, stdout)
        code = EXIT_SOUNDNESS if man.failures else EXIT_OK
    except SoundnessError as exc:
        stderr.write(f"soundness failure: {exc}\n")
        code = EXIT_SOUNDNESS
    except NumericalError as exc:
        stderr.write(f"numerical failure: {exc}\n")
        code = EXIT_NUMERICAL
    except (UsageError, GeometryError, OSError, ValueError) as exc:
        stderr.write(f"error: {exc}\n")
        code = EXIT_USAGE
    if man is not None and ns.manifest:
        man.wallTime = time.perf_counter() - start
        Path(ns.manifest).write_text(_dumps(asdict(man)))
    return code


if __name__ == "__main__":
    sys.exit(main())
