"""Command-line front end: apply operators, run verification suites, run the
Monte Carlo reconstruction, and emit JSON reports / CSV grids.

Exit codes: 0 success (and acceptance thresholds met), 1 acceptance failure,
2 usage or input error.  The default seed can be set through the
LATTICE_HILBERT_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import poisson, stochastic, transforms
from .signals import LatticeSignal, inner, load_signal, write_signal

_OPS = {
    "h": transforms.H_CENTERED,
    "h+": transforms.H_PLUS,
    "h-": transforms.H_MINUS,
    "naive": transforms.H_NAIVE,
    "d+": transforms.DERIV_PLUS,
    "d-": transforms.DERIV_MINUS,
    "d0": transforms.DERIV_CENTERED,
    "laplacian": transforms.LAPLACIAN,
    "sqrtlap": transforms.SQRT_NEG_LAPLACIAN,
    "shift+": transforms.SHIFT_PLUS,
    "shift-": transforms.SHIFT_MINUS,
}

_KERNEL_OPS = {"h", "h+", "h-", "naive"}


def _default_seed() -> int:
    return int(os.environ.get("LATTICE_HILBERT_SEED", "0"))


def _write_report(path: str | None, report: dict) -> None:
    text = json.dumps(report, indent=2, default=_jsonable)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not JSON-serializable: {type(obj)}")


def _load(path: str) -> LatticeSignal:
    if not os.path.exists(path):
        raise SystemExit2(f"input file not found: {path}")
    try:
        return load_signal(path)
    except ValueError as exc:
        raise SystemExit2(str(exc)) from None


class SystemExit2(Exception):
    """Usage/input error carrying a message; mapped to exit code 2."""


# ---------------------------------------------------------------------------
# subcommands


def _cmd_apply(args) -> int:
    f = _load(args.infile)
    op_key = args.op
    if op_key not in _OPS and op_key != "poisson":
        raise SystemExit2(f"unknown operator {op_key!r}")
    op = transforms.poisson_factor(args.y) if op_key == "poisson" else _OPS[op_key]

    mode = args.mode
    if mode == "auto":
        mode = "torus" if f.is_torus else "window"
    if mode == "torus":
        if not f.is_torus:
            raise SystemExit2("torus mode needs a torus signal "
                              "(header '# torus=N')")
        out = transforms.apply_spectral_torus(f, op)
    else:
        if not f.is_window:
            raise SystemExit2("window mode needs a window signal")
        if f.length == 0:
            out = LatticeSignal.window([], 0)
        elif op_key in _KERNEL_OPS and not args.spectral:
            out = transforms.apply_kernel(f, op, args.radius)
        elif op_key in ("d+", "d-", "d0"):
            out = transforms.discrete_derivative(f, op_key[1:])
        elif op_key in ("shift+", "shift-"):
            out = transforms.shift(f, +1 if op_key == "shift+" else -1)
        else:
            grid = transforms.SpectralGrid.gauss_split(args.q)
            out = transforms.apply_spectral_window(f, op, grid, args.radius)
    write_signal(args.out, out)
    return 0


def _cmd_verify(args) -> int:
    if args.suite == "algebra":
        report = transforms.identity_suite(args.torus, args.trials, args.seed)
        passed = report["passed"] and report["orientation_consistent"]
    elif args.suite == "consistency":
        report = transforms.multiplier_kernel_consistency(
            [0.25, -0.25, 0.125, 0.4], args.truncation)
        passed = (report["max_cesaro_error"] < 1e-3
                  and all(1.6 <= h <= 2.4 for h in report["halving_factors"]))
        report["passed"] = passed
    else:  # contrast
        report = transforms.naive_contrast(args.radius)
        passed = report["anti_involution_defect"] > 0.1
        report["passed"] = passed
    report["suite"] = args.suite
    _write_report(args.out, report)
    return 0 if passed else 1


def _torus_input(args, attr="infile") -> LatticeSignal:
    f = _load(getattr(args, attr))
    if not f.is_torus:
        raise SystemExit2("this command needs a torus signal "
                          "(header '# torus=N')")
    return f


def _cmd_extend(args) -> int:
    f = _torus_input(args)
    ext = poisson.extend(f)
    ys = [float(v) for v in args.ys.split(",")]
    if args.grid_out:
        with open(args.grid_out, "w", encoding="utf-8") as fh:
            fh.write("x,y,value\n")
            for y in ys:
                vals = ext.sites_at(y)
                for x in range(f.n):
                    fh.write(f"{x},{y:.17g},{vals[x]:.17g}\n")
    rep = poisson.harmonicity_residuals(
        f, [(x, y) for y in ys if y > 0 for x in range(f.n)])
    report = {
        "torus": f.n,
        "heights": ys,
        "harmonicity_max_residual": rep["max_residual"],
        "norm2": rep["norm2"],
        "tolerance": args.tol,
        "passed": rep["max_residual"] <= args.tol * max(rep["norm2"], 1e-300),
    }
    _write_report(args.out, report)
    return 0 if report["passed"] else 1


def _cmd_cr_check(args) -> int:
    f = _torus_input(args)
    try:
        rep = poisson.cauchy_riemann_residuals(f)
    except ValueError as exc:
        raise SystemExit2(str(exc)) from None
    rep["tolerance"] = args.tol
    rep["passed"] = rep["max_residual"] <= args.tol * max(rep["norm2"], 1e-300)
    _write_report(args.out, rep)
    return 0 if rep["passed"] else 1


def _pair_inputs(args) -> tuple[LatticeSignal, LatticeSignal]:
    f = _torus_input(args, "f")
    g = _torus_input(args, "g")
    if f.n != g.n:
        raise SystemExit2("f and g must live on the same torus")
    return f, g


def _cmd_lp_check(args) -> int:
    f, g = _pair_inputs(args)
    try:
        closed = poisson.littlewood_paley_pairing(f, g)
        numeric = poisson.littlewood_paley_pairing(
            f, g, poisson.YQuadrature.default_numeric(f, args.nodes))
    except ValueError as exc:
        raise SystemExit2(str(exc)) from None
    want = inner(f, g)
    scale = max(abs(want), f.norm2() * g.norm2() * 1e-6, 1e-300)
    report = {
        "inner_product": want,
        "closed_form": closed,
        "numeric": numeric,
        "closed_error": abs(closed - want),
        "numeric_error": abs(numeric - closed),
        "passed": (abs(closed - want) <= 1e-12 * max(1.0, abs(want))
                   and abs(numeric - closed) <= 1e-6 * scale),
    }
    _write_report(args.out, report)
    return 0 if report["passed"] else 1


def _cmd_weak_check(args) -> int:
    f, g = _pair_inputs(args)
    try:
        closed = poisson.hilbert_weak_pairing(f, g)
        numeric = poisson.hilbert_weak_pairing(
            f, g, poisson.YQuadrature.default_numeric(f, args.nodes))
    except ValueError as exc:
        raise SystemExit2(str(exc)) from None
    hf = transforms.apply_spectral_torus(f, transforms.H_CENTERED)
    want = inner(hf, g)
    scale = max(abs(want), f.norm2() * g.norm2() * 1e-6, 1e-300)
    report = {
        "transform_pairing": want,
        "closed_form": closed,
        "numeric": numeric,
        "closed_error": abs(closed - want),
        "numeric_error": abs(numeric - closed),
        "passed": (abs(closed - want) <= 1e-12 * max(1.0, abs(want))
                   and abs(numeric - closed) <= 1e-6 * scale),
    }
    _write_report(args.out, report)
    return 0 if report["passed"] else 1


def _walk_config(args, n: int, paths: int) -> stochastic.WalkConfig:
    try:
        return stochastic.WalkConfig(
            n=n, paths=paths, y0=args.y0, h0=args.h0, alpha=args.alpha,
            dt_min=args.dt_min, dt_max=args.dt_max, t_cap=args.tcap,
            seed=args.seed, workers=args.workers,
            reflect_mult=args.reflect, step_mode=args.step_mode)
    except ValueError as exc:
        raise SystemExit2(str(exc)) from None


def _config_dict(cfg: stochastic.WalkConfig) -> dict:
    return {
        "torus": cfg.n, "paths": cfg.paths, "y0": cfg.y0, "h0": cfg.h0,
        "alpha": cfg.alpha, "dt_min": cfg.dt_min_value, "dt_max": cfg.dt_max,
        "t_cap": cfg.t_cap_value, "seed": cfg.seed, "workers": cfg.workers,
        "reflect_mult": cfg.reflect_mult, "y_reflect": cfg.y_reflect,
        "step_mode": cfg.step_mode,
    }


def _cmd_simulate(args) -> int:
    f = _torus_input(args, "signal")
    if args.torus is not None and args.torus != f.n:
        raise SystemExit2(f"--torus {args.torus} does not match the signal "
                          f"(torus of size {f.n})")
    cfg = _walk_config(args, f.n, args.paths)
    if not f.mean_zero():
        raise SystemExit2("the walk needs a mean-zero signal")
    t0 = time.perf_counter()
    est = stochastic.run_monte_carlo(cfg, f)
    wall_ms = (time.perf_counter() - t0) * 1e3
    ref = transforms.apply_spectral_torus(f, transforms.H_CENTERED)

    dev = np.abs(est.means - ref.values)
    tol = 3.0 * est.std_errors + args.bias_budget
    sites_ok = int(np.sum(np.where(np.isfinite(dev), dev <= tol, False)))
    need = f.n - max(2, f.n // 8)
    z = np.where(est.std_errors > 0, dev / est.std_errors, np.inf)
    rate_ok = abs(est.jump_rate - 1.0) <= 3.0 * est.jump_rate_se + 1e-4
    passed = (sites_ok >= need and est.capped_fraction <= args.capped_budget
              and rate_ok)

    report = {
        "config": _config_dict(cfg),
        "estimate": [{"x": int(x), "mean": est.means[x], "se": est.std_errors[x],
                      "count": int(est.counts[x])} for x in range(f.n)],
        "reference": [{"x": int(x), "value": ref.values[x]} for x in range(f.n)],
        "max_abs_z": float(np.nanmax(z)),
        "sites_within_tolerance": sites_ok,
        "sites_required": need,
        "bias_budget": args.bias_budget,
        "capped_fraction": est.capped_fraction,
        "capped_budget": args.capped_budget,
        "aborted": est.aborted,
        "jumps_per_unit_time": est.jump_rate,
        "jump_rate_se": est.jump_rate_se,
        "martingale_mean": est.martingale_mean,
        "martingale_se": est.martingale_se,
        "y0_bias_bound": est.y0_bias_bound,
        "reflect_bias_bound": est.reflect_bias_bound,
        "wall_ms": wall_ms,
        "passed": bool(passed),
    }
    _write_report(args.out, report)
    return 0 if passed else 1


def _cmd_pair(args) -> int:
    f = _torus_input(args, "f")
    g = _torus_input(args, "g")
    if f.n != g.n:
        raise SystemExit2("f and g must live on the same torus")
    cfg = _walk_config(args, f.n, args.paths)
    if not (f.mean_zero() and g.mean_zero()):
        raise SystemExit2("pairing needs mean-zero signals")
    est, se = stochastic.pairing_mc(cfg, f, g)
    want = inner(transforms.apply_spectral_torus(f, transforms.H_CENTERED), g)
    tol = 3.0 * se + 0.01 * f.norm2() * g.norm2()
    report = {
        "config": _config_dict(cfg),
        "estimate": est,
        "se": se,
        "reference": want,
        "abs_error": abs(est - want),
        "tolerance": tol,
        "passed": bool(abs(est - want) <= tol),
    }
    _write_report(args.out, report)
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# parser


def _add_walk_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--paths", type=int, required=True, help="number of paths")
    p.add_argument("--y0", type=float, required=True, help="start height")
    p.add_argument("--h0", type=float, default=1e-3, help="base time step")
    p.add_argument("--alpha", type=float, default=0.1,
                   help="adaptive step factor: dt = clamp((alpha y)^2, ...)")
    p.add_argument("--dt-min", type=float, default=None,
                   help="adaptive step floor (default h0/10)")
    p.add_argument("--dt-max", type=float, default=1.0,
                   help="adaptive step cap")
    p.add_argument("--tcap", type=float, default=None,
                   help="max simulated duration (default 50 y0^2)")
    p.add_argument("--seed", type=int, default=_default_seed(),
                   help="master seed (default from LATTICE_HILBERT_SEED)")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--reflect", type=float, default=2.0,
                   help="reflecting barrier at reflect * y0")
    p.add_argument("--step-mode", choices=("adaptive", "uniform"),
                   default="adaptive")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lattice-hilbert",
        description="Centered discrete Hilbert transform: exact kernels, "
                    "multipliers, half-space identities, and the Monte Carlo "
                    "reconstruction.",
        epilog="Signals are CSV files with header 'x,value'; torus signals "
               "declare '# torus=N' on line 1.  LATTICE_HILBERT_SEED sets "
               "the default seed.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("apply", help="apply an operator to a signal file")
    p.add_argument("--op", required=True,
                   help="h | h+ | h- | naive | d+ | d- | d0 | laplacian | "
                        "sqrtlap | shift+ | shift- | poisson")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=("auto", "window", "torus"),
                   default="auto")
    p.add_argument("--radius", type=int, default=64,
                   help="output widening for window mode")
    p.add_argument("--spectral", action="store_true",
                   help="use quadrature synthesis instead of the exact kernel")
    p.add_argument("--q", type=int, default=4096, help="quadrature size")
    p.add_argument("--y", type=float, default=0.0,
                   help="height for --op poisson")
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser("verify", help="run a deterministic identity suite")
    p.add_argument("--suite", choices=("algebra", "consistency", "contrast"),
                   required=True)
    p.add_argument("--torus", type=int, default=64)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--truncation", type=int, default=100_000)
    p.add_argument("--radius", type=int, default=64)
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("extend", help="evaluate the half-space extension")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--ys", default="0.5,1,2", help="comma-separated heights")
    p.add_argument("--grid-out", default=None, help="CSV of x,y,value rows")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_extend)

    p = sub.add_parser("cr-check", help="conjugate-gradient relation residuals")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_cr_check)

    for name, helptext, fn in (
            ("lp-check", "weighted gradient pairing vs the inner product",
             _cmd_lp_check),
            ("weak-check", "rotated gradient pairing vs the transform",
             _cmd_weak_check)):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--f", required=True)
        p.add_argument("--g", required=True)
        p.add_argument("--nodes", type=int, default=80)
        p.add_argument("--out", default=None)
        p.set_defaults(func=fn)

    p = sub.add_parser("simulate", help="Monte Carlo reconstruction")
    p.add_argument("--signal", required=True, help="mean-zero torus CSV")
    p.add_argument("--torus", type=int, default=None,
                   help="expected torus size (checked against the signal)")
    _add_walk_flags(p)
    p.add_argument("--bias-budget", type=float, default=0.01)
    p.add_argument("--capped-budget", type=float, default=0.02)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("pair", help="Monte Carlo pairing vs the transform")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    _add_walk_flags(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pair)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
