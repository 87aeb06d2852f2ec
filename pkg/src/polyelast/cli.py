"""Batch front end: solves, sweeps, pressure reports, and invariant checks.

Output is data-only (CSV tables and versioned JSON reports); identical
configuration and seed produce bit-identical files.  Exit codes: 0 success,
1 invalid configuration, 2 no shooting bracket (direct-minimizer fallback
attempted and recorded in the report).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .direct_min import MaxItersExceeded, MinimizeOptions, minimize
from .energy import radial_energy
from .pressure import (
    PolarQuadForm,
    admissible_a_range,
    ncover_min_energy,
    pressure_gradient_field,
    small_pressure_check,
)
from .radial_bvp import (
    NoBracketError,
    RadialProfile,
    SolveOptions,
    diagnostics,
    solve_bvp,
)
from .rho import build_rho, rho_to_json

SCHEMA = 1


def _fmt(x):
    return f"{x:.17g}"


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _write_profile_csv(path, prof, diag):
    cols = ["R", "r", "dr", "d", "ddot", "z", "zdot"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(len(prof.grid)):
            row = (
                prof.grid[i], prof.r[i], prof.dr[i],
                diag.d[i], diag.ddot[i], diag.z[i], diag.zdot[i],
            )
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _read_profile_csv(path, M):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return RadialProfile(
        M=M,
        grid=np.atleast_1d(data["R"]),
        r=np.atleast_1d(data["r"]),
        dr=np.atleast_1d(data["dr"]),
    )


def _lift_json(lift):
    return {"delayed": lift.delayed, "delta": lift.delta}


def _rho_from_args(args):
    return build_rho(args.gamma, args.s0, args.delay)


def _solve_report(op, args, prof, diag, energy):
    return {
        "schema": SCHEMA,
        "op": op,
        "inputs": {
            "M": args.M, "gamma": args.gamma, "s0": args.s0,
            "delay": args.delay, "eps0": args.eps0, "grid": args.grid,
            "tol": args.tol,
        },
        "M": prof.M,
        "rho": rho_to_json(_rho_from_args(args)),
        "s_star": prof.s_seed,
        "residual_sup": diag.residual_sup,
        "lift_off": _lift_json(diag.lift_off),
        "DM_estimate": diag.DM_estimate,
        "energy": energy,
        "zdot_sign_changes": diag.zdot_sign_changes,
    }


def cmd_solve(args):
    rho = _rho_from_args(args)
    opts = SolveOptions(eps0=args.eps0, n_out=args.grid, tol_residual=args.tol)
    out = args.out
    try:
        prof, diag = solve_bvp(args.M, rho, opts)
    except NoBracketError as exc:
        mprof, mrep = minimize(args.M, rho, MinimizeOptions(init="identity"))
        mdiag = diagnostics(mprof, rho)
        report = {
            "schema": SCHEMA,
            "op": "solve_bvp",
            "error": "NoBracket",
            "detail": str(exc),
            "fallback": {
                "op": "minimize",
                "energy": radial_energy(mprof, rho).total,
                "lift_off": _lift_json(mdiag.lift_off),
            },
        }
        if args.format in ("json", "both"):
            _write_json(out + ".json", report)
        if args.format in ("csv", "both"):
            _write_profile_csv(out + ".csv", mprof, mdiag)
        print("NoBracket: wrote direct-minimizer fallback", file=sys.stderr)
        return 2
    energy = radial_energy(prof, rho).total
    report = _solve_report("solve_bvp", args, prof, diag, energy)
    if args.format in ("json", "both"):
        _write_json(out + ".json", report)
    if args.format in ("csv", "both"):
        _write_profile_csv(out + ".csv", prof, diag)
    return 0 if diag.residual_sup < args.tol else 2


def cmd_minimize(args):
    rho = _rho_from_args(args)
    opts = MinimizeOptions(
        grid_size=args.grid, init=args.init, init_s=args.init_s, seed=args.seed,
    )
    log = []
    try:
        prof, rep = minimize(args.M, rho, opts, log=log)
        status = 0
    except MaxItersExceeded as exc:
        prof, rep = exc.profile, exc.energy
        status = 2
    diag = diagnostics(prof, rho)
    report = {
        "schema": SCHEMA,
        "op": "minimize",
        "inputs": {
            "M": args.M, "gamma": args.gamma, "s0": args.s0, "delay": args.delay,
            "grid": args.grid, "init": args.init, "seed": args.seed,
        },
        "rho": rho_to_json(rho),
        "energy": rep.total,
        "dirichlet_part": rep.dirichlet_part,
        "rho_part": rep.rho_part,
        "lift_off": _lift_json(diag.lift_off),
        "converged": status == 0,
    }
    _write_json(args.out + ".json", report)
    _write_profile_csv(args.out + ".csv", prof, diag)
    with open(args.out + "_iters.csv", "w") as fh:
        fh.write("iter,energy,grad_norm,step\n")
        for row in log:
            fh.write(f"{row[0]}," + ",".join(_fmt(v) for v in row[1:]) + "\n")
    return status


def cmd_energy(args):
    rho = _rho_from_args(args)
    prof = _read_profile_csv(args.profile, args.M)
    rep = radial_energy(prof, rho)
    report = {
        "schema": SCHEMA,
        "op": "radial_energy",
        "inputs": {"profile": args.profile, "M": args.M, "gamma": args.gamma,
                   "s0": args.s0, "delay": args.delay},
        "total": rep.total,
        "dirichlet_part": rep.dirichlet_part,
        "rho_part": rep.rho_part,
        "quad_error_estimate": rep.quad_error_estimate,
    }
    if args.out:
        _write_json(args.out, report)
    else:
        print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def cmd_pressure(args):
    form = PolarQuadForm.constant(args.nu, args.a)
    R = np.linspace(0.05, 1.0, 20)
    theta = np.linspace(0.0, 2.0 * math.pi, 33)[:-1]
    pg = pressure_gradient_field(form, args.N, R, theta)
    lo, hi = admissible_a_range(args.N)
    passed, strict = small_pressure_check(pg.sup_norm_P, args.nu, mode="radial_only")
    report = {
        "schema": SCHEMA,
        "op": "ncover_pressure",
        "inputs": {"N": args.N, "a": args.a, "nu": args.nu},
        "lamRR": float(pg.lam_R_times_R.flat[0]),
        "lam_theta": float(pg.lam_theta.flat[0]),
        "P": pg.sup_norm_P,
        "threshold": args.nu,
        "admissible_a": [lo, hi],
        "pass": passed,
        "strict": strict,
        "min_energy": ncover_min_energy(args.nu, args.a, args.N),
    }
    if args.eps is not None:
        from .pressure import TwistProfile, buckling_energy, p_eps

        g = np.exp(np.linspace(math.log(1e-6), 0.0, 257))
        g[-1] = 1.0
        tp = TwistProfile(grid=g, k=np.zeros_like(g), dk=np.zeros_like(g), eps=args.eps)
        report["buckling"] = {
            "eps": args.eps,
            "p_eps": p_eps(args.eps),
            "D_eps_identity": buckling_energy(tp, args.eps),
            "identity_pressure_slope": -p_eps(args.eps),
        }
    if args.out:
        _write_json(args.out + ".json", report)
        with open(args.out + ".csv", "w") as fh:
            fh.write("R,theta,lam_theta,lam_R_R\n")
            for i, r in enumerate(R):
                for j, t in enumerate(theta):
                    fh.write(
                        ",".join(_fmt(v) for v in
                                 (r, t, pg.lam_theta[i, j], pg.lam_R_times_R[i, j]))
                        + "\n")
    else:
        print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def _parse_range(text):
    """'a:b:step' -> inclusive grid; plain number -> [value]."""
    if ":" in text:
        a, b, s = (float(t) for t in text.split(":"))
        n = int(round((b - a) / s)) + 1
        return [a + i * s for i in range(n) if a + i * s <= b + 1e-12]
    return [float(text)]


def _sweep_one(job):
    """One sweep run; writes its own JSON file, returns the index row."""
    idx, M, gamma, s0, delay, grid, tol, run_dir = job
    rho = build_rho(gamma, s0, delay)
    try:
        prof, diag = solve_bvp(M, rho, SolveOptions(n_out=grid, tol_residual=tol))
        energy = radial_energy(prof, rho).total
        row = (M, gamma, s0, delay, prof.s_seed, energy, diag.residual_sup,
               diag.DM_estimate, str(diag.lift_off), "ok")
    except NoBracketError:
        prof, rep = minimize(M, rho, MinimizeOptions(init="identity"))
        row = (M, gamma, s0, delay, math.nan, rep.total, math.nan,
               math.nan, "n/a", "no_bracket_minimized")
    if run_dir:
        _write_json(os.path.join(run_dir, f"run_{idx:04d}.json"), {
            "schema": SCHEMA,
            "op": "sweep_run",
            "inputs": {"M": M, "gamma": gamma, "s0": s0, "delay": delay},
            "s_star": row[4],
            "energy": row[5],
            "residual_sup": row[6],
            "status": row[9],
        })
    return row


def cmd_sweep(args):
    run_dir = os.path.splitext(args.out)[0] + "_runs"
    os.makedirs(run_dir, exist_ok=True)
    jobs = [
        (i, int(M), g, args.s0, d, args.grid, args.tol, run_dir)
        for i, (M, g, d) in enumerate(
            (M, g, d)
            for M in _parse_range(args.M)
            for g in _parse_range(args.gamma)
            for d in _parse_range(args.delay)
        )
    ]
    workers = int(os.environ.get("POLYELAST_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    # index written by the coordinator only, in job order
    with open(args.out, "w") as fh:
        fh.write("M,gamma,s0,delay,s_star,energy,residual_sup,DM_estimate,lift_off,status\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row) + "\n")
    return 0


def _check_battery():
    """Fast end-to-end invariant suite; yields (name, ok) pairs."""
    from .algebra import cofactor, det_expansion, frob_norm, monotonicity_gap
    from .fourier import decompose, disk_grid, weighted_norms
    from .pressure import (TwistProfile, buckling_energy, hf_thresholds,
                           ncover_pressure_system, p_eps, twist_pressure_slope)
    from .rho import f_aux, rho_eval

    rng = np.random.default_rng(20260810)

    A = rng.normal(size=(2000, 2, 2))
    B = rng.normal(size=(2000, 2, 2))
    yield "cofactor norm identity", bool(
        np.max(np.abs(frob_norm(cofactor(A)) - frob_norm(A))) < 1e-12)
    lhs, rhs = det_expansion(A, B)
    yield "determinant expansion", bool(np.max(np.abs(lhs - rhs)) < 1e-12)
    ok = True
    for g in (0.1, 1.0, 10.0):
        rho = build_rho(g)
        ok &= bool(np.min(monotonicity_gap(A, B, rho)) >= -1e-10)
    yield "monotonicity gap", ok

    rho = build_rho(1.0)
    ok = True
    for x in (rho.delay, rho.s0):
        lo = rho_eval(rho, x - 1e-12)
        hi = rho_eval(rho, x + 1e-12)
        ok &= all(abs(a - b) < 1e-6 for a, b in zip(lo, hi))
    yield "rho junction continuity", ok
    d = np.linspace(0, 3, 301)
    yield "f_aux nonnegative nondecreasing", bool(
        np.min(f_aux(rho, d)) >= 0 and np.min(np.diff(f_aux(rho, d))) >= -1e-12)

    g = np.exp(np.linspace(math.log(1e-6), 0.0, 129)); g[-1] = 1.0
    ok = True
    for eps in (1.2, math.sqrt(2.0), 2.0):
        tp = TwistProfile(grid=g, k=np.zeros_like(g), dk=np.zeros_like(g), eps=eps)
        ok &= abs(buckling_energy(tp, eps) / (math.pi * (eps + 1 / eps)) - 1) < 1e-6
        ok &= abs(twist_pressure_slope(tp, 0.5) + p_eps(eps)) < 1e-12
    yield "buckling identity and twist pressure", ok

    form = PolarQuadForm.constant(1.0, 5.0)
    lt, lrr = ncover_pressure_system(form, 2, 0.5, rng.uniform(0, 2 * math.pi, 100))
    yield "ncover pressure closed form", bool(
        np.max(np.abs(lt)) < 1e-10 and np.max(np.abs(lrr + 0.5)) < 1e-10)
    yield "hf threshold arithmetic", hf_thresholds(1.5, 1.0) == (2, 3)

    R, wR, theta = disk_grid(32, 128)
    samples = np.zeros((32, 128, 2))
    samples[:, :, 0] = (R**3)[:, None] * np.cos(3 * theta)[None, :]
    th, pl = weighted_norms(decompose(samples, 8))
    yield "fourier mode identity", abs(th / pl - 9.0) < 1e-8

    rho1 = build_rho(1.0)
    prof, diag = solve_bvp(1, rho1, SolveOptions(n_out=128))
    yield "M=1 ground truth", bool(
        np.max(np.abs(prof.r - prof.grid)) < 1e-6
        and abs(radial_energy(prof, rho1).total / (math.pi * 1.5) - 1) < 1e-6)


def cmd_check(args):
    failed = 0
    for name, ok in _check_battery():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failed += 0 if ok else 1
    if failed:
        print(f"{failed} check(s) failed", file=sys.stderr)
    return 1 if failed else 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_rho_args(p):
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--s0", type=float, default=1.0)
    p.add_argument("--delay", type=float, default=0.0)


def build_parser():
    parser = _Parser(prog="polyelast", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="shooting solve of the radial problem")
    p.add_argument("--M", type=int, required=True)
    _add_rho_args(p)
    p.add_argument("--eps0", type=float, default=1e-6)
    p.add_argument("--grid", type=int, default=512)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", default="solve")
    p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("minimize", help="direct minimization of the radial energy")
    p.add_argument("--M", type=int, required=True)
    _add_rho_args(p)
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--init", choices=("identity", "powerlaw", "random"), default="identity")
    p.add_argument("--init-s", type=float, default=1.0, dest="init_s")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="minimize")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("energy", help="energy of a stored profile CSV")
    p.add_argument("--profile", required=True)
    p.add_argument("--M", type=int, required=True)
    _add_rho_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("pressure", help="N-cover pressure and counterexample report")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=None,
                   help="also report the weighted-energy identity block at this eps")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("sweep", help="parameter sweep, one CSV row per run")
    p.add_argument("--M", default="2")
    p.add_argument("--gamma", default="1.0")
    p.add_argument("--s0", type=float, default=1.0)
    p.add_argument("--delay", default="0.0")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", default="sweep.csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="run the invariant battery")
    p.set_defaults(func=cmd_check)
    return parser


def _validate(args):
    if getattr(args, "M", None) is not None and isinstance(args.M, int) and args.M < 1:
        return "M must be >= 1"
    if getattr(args, "gamma", None) is not None and isinstance(args.gamma, float) and args.gamma <= 0:
        return "gamma must be > 0"
    if getattr(args, "delay", None) is not None and isinstance(args.delay, float):
        if not 0 <= args.delay < args.s0:
            return "need 0 <= delay < s0"
    if getattr(args, "N", None) is not None and args.N < 2:
        return "N must be >= 2"
    return None


def main(argv=None):
    args = build_parser().parse_args(argv)
    msg = _validate(args)
    if msg:
        print(f"error: {msg}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
