"""Command-line entry point.

One executable, eight subcommands. Exit codes: 0 success, 1 a mathematical
verification failed (a bound violated beyond slack, a residual above
tolerance), 2 usage error. All file outputs are byte-reproducible for fixed
flags and seed; a manifest.json with sha256 checksums accompanies every --out
directory.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .counterexamples import inhomogeneous_pair, volterra_pair
from .forward import primitive, solve
from .gmt import coarea_check, good_levels
from .grids import (
    CoefficientBounds,
    GridFunction1D,
    Interval,
    derivative,
    fmt_float,
    load_grid_function,
)
from .inverse import recover
from .pw2d import (
    Partition2D,
    PwConstCoefficient,
    fem_solve,
    field_to_json_dict,
    hminus1_norm,
    recover_pw,
    verify_pw_bound,
)
from .report import ExperimentReport, canonical_json
from .stability import (
    DyadicFamily,
    ExponentFit,
    dyadic_rate,
    fit_exponents,
    holder_exponent,
    verify_holder,
)

__all__ = ["main", "RunConfig"]


@dataclass
class RunConfig:
    """Uniform run settings shared by the subcommands."""

    seed: int | None = None
    n: int | None = None
    out: str | None = None
    fmt: str = "both"
    threads: int | None = None
    tolerances: dict = field(default_factory=dict)
    argv: tuple = ()


def _threads_from_env() -> int | None:
    raw = os.environ.get("COEFFID_THREADS")
    if not raw:
        return None
    try:
        v = int(raw)
    except ValueError:
        return None
    return v if v > 0 else None


def _parse_grid_function(literal: str, interval: Interval, n: int) -> GridFunction1D:
    """Inline input literals: const:c, linear:c0,c1 (c0 + c1*x), csv:path,
    json:path."""
    kind, sep, rest = literal.partition(":")
    if not sep:
        raise ValueError(f"malformed function literal {literal!r}: expected kind:args")
    if kind == "const":
        return GridFunction1D.const(float(rest), interval, n)
    if kind == "linear":
        c0, c1 = (float(t) for t in rest.split(","))
        return GridFunction1D.from_callable(lambda x: c0 + c1 * x, interval, n)
    if kind in ("csv", "json"):
        return load_grid_function(rest)
    raise ValueError(f"unknown function literal kind {kind!r} (use const/linear/csv/json)")


def _emit(cfg: RunConfig, stem: str, report: ExperimentReport, extra: dict | None = None) -> None:
    """Write or print the report; extra maps filename -> text payload."""
    if cfg.out is None:
        print(report.to_json())
        return
    outdir = Path(cfg.out)
    outdir.mkdir(parents=True, exist_ok=True)
    written = {}
    if cfg.fmt in ("json", "both"):
        data = report.to_json().encode()
        (outdir / f"{stem}.json").write_bytes(data)
        written[f"{stem}.json"] = hashlib.sha256(data).hexdigest()
    if cfg.fmt in ("csv", "both") and report.curves:
        data = report.curves_csv().encode()
        (outdir / f"{stem}.csv").write_bytes(data)
        written[f"{stem}.csv"] = hashlib.sha256(data).hexdigest()
    for name, text in (extra or {}).items():
        data = text.encode()
        (outdir / name).write_bytes(data)
        written[name] = hashlib.sha256(data).hexdigest()
    # the output location is not an input: dropping it keeps manifests
    # byte-identical across reruns into different directories
    argv = list(cfg.argv)
    if "--out" in argv:
        i = argv.index("--out")
        del argv[i : i + 2]
    manifest = canonical_json(
        {
            "package": f"coeffid {__version__}",
            "command": stem,
            "argv": argv,
            "seed": cfg.seed,
            "threads": cfg.threads,
            "outputs": dict(sorted(written.items())),
        }
    )
    (outdir / "manifest.json").write_bytes(manifest.encode())


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_forward(args, cfg: RunConfig) -> int:
    iv = Interval(args.lo, args.hi)
    a = _parse_grid_function(args.a, iv, args.n)
    f = _parse_grid_function(args.f, a.interval, a.n)
    sol = solve(a, f)
    rep = ExperimentReport(
        name="forward",
        inputs={"a": args.a, "f": args.f, "n": a.n, "lo": a.interval.lo, "hi": a.interval.hi},
        metrics={
            "Ca": sol.Ca,
            "flux_residual": sol.flux_residual,
            "boundary_residual": sol.boundary_residual,
            "u_mid": float(sol.u.values[a.n // 2]),
        },
        curves={"x": list(a.x), "u": list(sol.u.values), "du": list(sol.du.values),
                "F": list(sol.F.values)},
        passed=True,
    )
    payload = canonical_json(
        {"Ca": sol.Ca, "u": sol.u.to_json_dict(), "du": sol.du.to_json_dict(),
         "F": sol.F.to_json_dict()}
    )
    _emit(cfg, "forward", rep, {"solution.json": payload})
    return 0


def _cmd_recover(args, cfg: RunConfig) -> int:
    iv = Interval(args.lo, args.hi)
    if args.du:
        du = _parse_grid_function(args.du, iv, args.n)
    else:
        du = derivative(_parse_grid_function(args.u, iv, args.n))
    f = _parse_grid_function(args.f, du.interval, du.n)
    bounds = CoefficientBounds(args.lam, args.Lam)
    res = recover(du, f, bounds, args.threshold)
    rep = ExperimentReport(
        name="recover",
        inputs={"f": args.f, "n": du.n, "lambda": bounds.lam, "Lambda": bounds.Lam},
        metrics={
            "C": res.C,
            "threshold": res.threshold,
            "fraction_degenerate": res.fraction_degenerate,
            "n_clamped": res.n_clamped,
        },
        curves={"x": list(du.x), "a": list(res.a.values),
                "masked": [int(v) for v in res.degenerate_mask]},
        passed=True,
        notes=f"zero candidates: {[fmt_float(c) for c in res.candidates][:8]}",
    )
    _emit(cfg, "recover", rep, {"coefficient.json": res.a.to_json()})
    return 0


def _cmd_exponents(args, cfg: RunConfig) -> int:
    iv = Interval(args.lo, args.hi)
    if args.F:
        F = _parse_grid_function(args.F, iv, args.n)
    else:
        F = primitive(_parse_grid_function(args.f, iv, args.n))
    span = float(F.values.max() - F.values.min())
    rho_max = args.rho_max if args.rho_max is not None else span / 4.0
    rho_min = args.rho_min if args.rho_min is not None else rho_max / 512.0
    rho_grid = np.geomspace(rho_max, rho_min, args.rho_points)
    fit = fit_exponents(F, rho_grid, args.M_points)
    rep = ExperimentReport(
        name="exponents",
        inputs={"n": F.n, "rho_min": rho_min, "rho_max": rho_max,
                "rho_points": args.rho_points, "M_points": args.M_points},
        metrics={"alpha": fit.alpha, "beta": fit.beta, "C1": fit.C1, "C2": fit.C2,
                 "residual": fit.residual, "beta_degenerate": fit.beta_degenerate},
        curves={"rho": list(fit.rho_grid), "inf_measure": list(fit.inf_curve),
                "sup_measure": list(fit.sup_curve)},
        passed=True,
    )
    _emit(cfg, "exponents", rep)
    return 0


def _cmd_holder(args, cfg: RunConfig) -> int:
    iv = Interval(args.lo, args.hi)
    a = _parse_grid_function(args.a, iv, args.n)
    b = _parse_grid_function(args.b, a.interval, a.n)
    f = _parse_grid_function(args.f, a.interval, a.n)
    if args.alpha is not None and args.beta is not None:
        fit = ExponentFit(alpha=args.alpha, beta=args.beta, C1=1.0, C2=1.0,
                          rho_grid=(), residual=0.0, beta_degenerate=False,
                          inf_curve=(), sup_curve=())
    else:
        F = primitive(f)
        span = float(F.values.max() - F.values.min())
        fit = fit_exponents(F, np.geomspace(span / 4.0, span / 2048.0, 10), 32)
    if fit.beta_degenerate or fit.beta <= 0.0:
        rep = ExperimentReport(
            name="holder",
            inputs={"a": args.a, "b": args.b, "f": args.f, "p": args.p,
                    "alpha": fit.alpha, "beta": fit.beta},
            passed=False,
            notes="band-measure sup branch does not decay (flat primitive): "
            "no positive stability exponent exists for this source",
        )
        _emit(cfg, "holder", rep)
        return 1
    hr = verify_holder(a, b, f, args.p, fit)
    rep = ExperimentReport(
        name="holder",
        inputs={"a": args.a, "b": args.b, "f": args.f, "p": args.p,
                "alpha": fit.alpha, "beta": fit.beta},
        metrics={"lhs": hr.lhs, "rhs_norm": hr.rhs_norm, "exponent": hr.exponent,
                 "constant_needed": hr.constant_needed, "eta": hr.eta,
                 "c0_implied": hr.c0_implied},
        passed=True,
    )
    _emit(cfg, "holder", rep)
    return 0


def _cmd_dyadic(args, cfg: RunConfig) -> int:
    fam = DyadicFamily(alpha_d=args.alpha, beta_d=args.beta, jmax=args.jmax)
    rep = dyadic_rate(fam, args.p, range(args.jmin, args.jmax + 1), args.n)
    _emit(cfg, "dyadic", rep)
    return 0 if rep.passed else 1


def _cmd_counterexample(args, cfg: RunConfig) -> int:
    if args.kind == "volterra":
        pair = volterra_pair(args.level, args.n, args.amp)
        bar = 1e-8
        stem = "counterexample_volterra"
        inputs = {"level": args.level, "n": args.n, "amp": args.amp}
    else:
        pair = inhomogeneous_pair(args.n)
        bar = 1e-9
        stem = "counterexample_inhomogeneous"
        inputs = {"n": args.n}
    certified = pair.residual_a < bar and pair.residual_b < bar and pair.coeff_gap > 0.1
    rep = ExperimentReport(
        name=stem,
        inputs=inputs,
        metrics={"residual_a": pair.residual_a, "residual_b": pair.residual_b,
                 "coeff_gap": pair.coeff_gap},
        curves={"x": list(pair.a.x), "a": list(pair.a.values), "b": list(pair.b.values),
                "u": list(pair.u.values), "du": list(pair.du.values),
                "f": list(pair.f.values)},
        passed=certified,
    )
    _emit(cfg, stem, rep)
    return 0 if certified else 1


def _cmd_coarea(args, cfg: RunConfig) -> int:
    iv = Interval(args.lo, args.hi)
    h = _parse_grid_function(args.h, iv, args.n)
    rep = coarea_check(h, args.nlevels)
    if args.t_start is not None:
        levels = good_levels(h, args.t_start)
        rep.metrics["n_good_levels"] = len(levels)
        rep.notes = f"good levels down to {fmt_float(levels[-1])}"
    _emit(cfg, "coarea", rep)
    return 0 if rep.passed else 1


def _cmd_pw2d_verify(args, cfg: RunConfig) -> int:
    part = Partition2D(args.nx, args.ny)
    bounds = CoefficientBounds(args.lam, args.Lam)
    rng = np.random.default_rng(args.seed)
    hm = np.array([hminus1_norm(1.0, part, i, args.m) for i in range(part.n_blocks)])
    worst = 0.0
    trial_ratios = []
    for _ in range(args.trials):
        ca = rng.uniform(bounds.lam, bounds.Lam, part.n_blocks)
        cb = rng.uniform(bounds.lam, bounds.Lam, part.n_blocks)
        rep_t = verify_pw_bound(
            PwConstCoefficient(part, ca), PwConstCoefficient(part, cb), 1.0,
            args.m, bounds=bounds, block_hminus1=hm,
        )
        trial_ratios.append(rep_t.metrics["max_ratio"])
        worst = max(worst, rep_t.metrics["max_ratio"])
    slack = 1.0 + 5.0 / args.m
    rep = ExperimentReport(
        name="pw2d_verify",
        inputs={"nx": args.nx, "ny": args.ny, "m": args.m, "trials": args.trials,
                "seed": args.seed, "lambda": bounds.lam, "Lambda": bounds.Lam},
        metrics={"worst_ratio": worst, "slack": slack},
        curves={"trial": list(range(args.trials)), "max_ratio": trial_ratios},
        passed=bool(worst <= slack),
    )
    _emit(cfg, "pw2d_verify", rep)
    return 0 if rep.passed else 1


def _cmd_pw2d_recover(args, cfg: RunConfig) -> int:
    truth = PwConstCoefficient.from_json_dict(json.loads(Path(args.truth).read_text()))
    bounds = CoefficientBounds(args.lam, args.Lam)
    u_meas = fem_solve(truth, 1.0, args.m)
    res = recover_pw(u_meas, 1.0, truth.partition, bounds, args.m)
    errs = np.abs(res.coeff.coeffs - truth.coeffs)
    rep = ExperimentReport(
        name="pw2d_recover",
        inputs={"truth": args.truth, "m": args.m,
                "nx": truth.partition.nx, "ny": truth.partition.ny},
        metrics={"max_abs_error": float(errs.max()), "sweeps": res.sweeps,
                 "objective": res.objective, "converged": res.converged},
        curves={"block": list(range(truth.partition.n_blocks)),
                "truth": list(truth.coeffs), "recovered": list(res.coeff.coeffs)},
        passed=bool(res.converged and res.warning is None),
        notes=res.warning or "",
    )
    extra = {"u_meas.json": canonical_json(field_to_json_dict(u_meas))}
    _emit(cfg, "pw2d_recover", rep, extra)
    return 0 if rep.passed else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, n_default: int = 1024) -> None:
    p.add_argument("--n", type=int, default=n_default, help="number of grid cells")
    p.add_argument("--lo", type=float, default=0.0, help="left endpoint")
    p.add_argument("--hi", type=float, default=1.0, help="right endpoint")
    p.add_argument("--out", type=str, default=None, help="output directory")
    p.add_argument("--format", dest="fmt", choices=("json", "csv", "both"), default="both")
    p.add_argument("--seed", type=int, default=None, help="rng seed for randomized sweeps")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="coeffid",
        description="Forward/inverse solvers and stability experiments for "
        "recovering the diffusion coefficient in -(a u')' = f from u.",
    )
    ap.add_argument("--version", action="version", version=f"coeffid {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "forward",
        help="solve -(a u')' = f exactly via the flux identity a u' = C - F",
    )
    p.add_argument("--a", required=True, help="coefficient literal (const:c, linear:c0,c1, csv:path)")
    p.add_argument("--f", required=True, help="source literal")
    _add_common(p)
    p.set_defaults(run=_cmd_forward)

    p = sub.add_parser(
        "recover",
        help="recover a = (C - F)/u' from u' and f, identifying C from a zero of u'",
    )
    p.add_argument("--du", default=None, help="derivative data literal")
    p.add_argument("--u", default=None, help="solution data literal (differentiated first)")
    p.add_argument("--f", required=True, help="source literal")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--Lambda", dest="Lam", type=float, default=2.0)
    p.add_argument("--threshold", type=float, default=None,
                   help="mask |u'| below this (default: sqrt(h) max|u'| / 100)")
    _add_common(p)
    p.set_defaults(run=_cmd_recover)

    p = sub.add_parser(
        "exponents",
        help="fit the two-sided scaling C1 rho^alpha <= inf|K_rho| <= sup|K_rho| <= C2 rho^beta "
        "of the level-band measures of F",
    )
    p.add_argument("--f", default=None, help="source literal (integrated to F)")
    p.add_argument("--F", default=None, help="primitive literal (used directly)")
    p.add_argument("--rho-min", dest="rho_min", type=float, default=None)
    p.add_argument("--rho-max", dest="rho_max", type=float, default=None)
    p.add_argument("--rho-points", dest="rho_points", type=int, default=10)
    p.add_argument("--M-points", dest="M_points", type=int, default=32)
    _add_common(p, n_default=4096)
    p.set_defaults(run=_cmd_exponents)

    p = sub.add_parser(
        "holder",
        help="measure both sides of |a-b|_Lp <= C |u'_a-u'_b|_L2^gamma for one pair",
    )
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--alpha", type=float, default=None, help="band-measure growth exponent")
    p.add_argument("--beta", type=float, default=None, help="band-measure flatness exponent")
    _add_common(p, n_default=4096)
    p.set_defaults(run=_cmd_holder)

    p = sub.add_parser(
        "dyadic",
        help="measure the rate |a-a_j|_Lp ~ |u-u_j|_V^gamma on the multiscale family, "
        "gamma = (1/p - beta)/(alpha - 1/2 - beta)",
    )
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--jmax", type=int, default=10)
    p.add_argument("--jmin", type=int, default=4)
    _add_common(p, n_default=2**16)
    p.set_defaults(run=_cmd_dyadic)

    p = sub.add_parser(
        "counterexample",
        help="emit a machine-checked non-identifiability certificate",
    )
    csub = p.add_subparsers(dest="kind", required=True)
    pv = csub.add_parser(
        "volterra",
        help="fat-Cantor-set pair: two coefficients, one solution, source nonzero on every gap",
    )
    pv.add_argument("--level", type=int, default=3)
    pv.add_argument("--amp", type=float, default=0.5)
    _add_common(pv, n_default=2**15)
    pv.set_defaults(run=_cmd_counterexample)
    pi = csub.add_parser(
        "inhomogeneous",
        help="boundary-data pair: -(a u')' = -(b u')' = 1 with a != b",
    )
    _add_common(pi, n_default=1024)
    pi.set_defaults(run=_cmd_counterexample)

    p = sub.add_parser(
        "coarea",
        help="verify TV(h) = integral of the level-set perimeters P({h > t}) dt",
    )
    p.add_argument("--h", required=True, help="profile literal")
    p.add_argument("--nlevels", type=int, default=64)
    p.add_argument("--t-start", dest="t_start", type=float, default=None,
                   help="also scan good levels with P <= 1/(t |ln t|) from here")
    _add_common(p, n_default=4096)
    p.set_defaults(run=_cmd_coarea)

    p = sub.add_parser(
        "pw2d",
        help="piecewise-constant coefficients on the unit square",
    )
    psub = p.add_subparsers(dest="kind", required=True)
    pverify = psub.add_parser(
        "verify",
        help="check |a_i-b_i| |f|_{H^-1(D_i)} <= Lam^2 |grad(u_a-u_b)|_{L2(D_i)} per block "
        "on random admissible pairs",
    )
    pverify.add_argument("--nx", type=int, default=2)
    pverify.add_argument("--ny", type=int, default=2)
    pverify.add_argument("--m", type=int, default=64)
    pverify.add_argument("--trials", type=int, default=10)
    pverify.add_argument("--lambda", dest="lam", type=float, default=0.5)
    pverify.add_argument("--Lambda", dest="Lam", type=float, default=2.0)
    _add_common(pverify)
    pverify.set_defaults(run=_cmd_pw2d_verify)
    precover = psub.add_parser(
        "recover",
        help="recover per-block constants from a measured field by coordinate descent",
    )
    precover.add_argument("--truth", required=True, help="json file {nx, ny, coeffs}")
    precover.add_argument("--m", type=int, default=64)
    precover.add_argument("--lambda", dest="lam", type=float, default=0.5)
    precover.add_argument("--Lambda", dest="Lam", type=float, default=2.0)
    _add_common(precover)
    precover.set_defaults(run=_cmd_pw2d_recover)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = ap.parse_args(argv)
    if getattr(args, "command", None) == "recover" and not (args.du or args.u):
        ap.error("recover needs --du or --u")
    if getattr(args, "command", None) == "exponents" and not (args.f or args.F):
        ap.error("exponents needs --f or --F")
    cfg = RunConfig(
        seed=getattr(args, "seed", None),
        n=getattr(args, "n", None),
        out=getattr(args, "out", None),
        fmt=getattr(args, "fmt", "both"),
        threads=_threads_from_env(),
        argv=tuple(argv),
    )
    try:
        return args.run(args, cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RuntimeError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
