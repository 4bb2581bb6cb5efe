"""``pharmonic`` command line: measure, verify, variation, solve, roundtrip.

Exit codes: 0 success, 1 verification failures, 2 invalid input, 3 no convergence,
4 file errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import config as config_mod
from . import minkowski, suites, svg
from .errors import InputOutputError, PharmonicError, ValidationError
from .geometry import (
    SupportFunction,
    hausdorff,
    make_grid,
    regular_polygon,
    rounded_square,
    support_function_from_json,
    support_function_to_json,
    support_of_ball,
    support_of_ellipse,
)
from .measure import gamma, lq_measure, measure_centroid, pharmonic_measure, read_measure_csv, write_measure_csv
from .variation import verify_variation

log = logging.getLogger("pharmonic")

EXIT_FAIL = 1


# -- IO helpers ----------------------------------------------------------------


def _write_text(path, text: str) -> None:
    try:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputOutputError("io", str(exc)) from exc


def _write_csv(path, header, rows) -> None:
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])
    except OSError as exc:
        raise InputOutputError("io", str(exc)) from exc


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return v


def load_body(source: str, M: int) -> SupportFunction:
    """A body from a JSON file or a built-in name.

    Built-ins: ``ball``, ``ball:R``, ``ellipse:a,b``, ``rounded-square``, ``polygon:m``.
    """
    if os.path.exists(source) or source.endswith(".json"):
        try:
            with open(source) as fh:
                text = fh.read()
        except OSError as exc:
            raise InputOutputError("io", str(exc)) from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError("bad-body-file", f"{source}: line {exc.lineno}: {exc.msg}") from None
        return support_function_from_json(data)
    name, _, arg = source.partition(":")
    grid = make_grid(M)
    try:
        nums = [float(x) for x in arg.split(",")] if arg else []
        if name == "ball":
            return support_of_ball(nums[0] if nums else 1.0, grid=grid)
        if name == "ellipse":
            return support_of_ellipse(nums[0], nums[1], grid)
        if name == "rounded-square":
            return rounded_square(grid)
        if name == "polygon":
            return regular_polygon(int(nums[0]), grid)
    except (IndexError, ValueError):
        raise ValidationError("bad-body", f"cannot parse body {source!r}") from None
    raise ValidationError("bad-body", f"unknown body {source!r} (and no such file)")


def _digest(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(repr(p).encode())
    return h.hexdigest()[:16]


def _report(args, outcome: str, t0: float, artifacts, digest: str) -> None:
    print(f"report: command={args.command} inputs={digest} wall={time.time() - t0:.2f}s outcome={outcome}")
    for a in artifacts:
        print(f"  wrote {a}")


def _out(cfg, args, name: str) -> str:
    return os.path.join(cfg.output_dir, name)


# -- commands --------------------------------------------------------------------


def cmd_measure(args, cfg) -> int:
    t0 = time.time()
    K = load_body(args.body, cfg.M)
    acfg = cfg.annulus_config()
    q = cfg.solver.q if args.q is None else args.q
    mu = pharmonic_measure(K, acfg)
    muq = lq_measure(K, q, acfg)
    paths = [_out(cfg, args, "measure.csv"), _out(cfg, args, "lq_measure.csv"), _out(cfg, args, "measure.svg")]
    write_measure_csv(mu, paths[0])
    write_measure_csv(muq, paths[1])
    _write_text(paths[2], svg.polar_plot(mu.grid.angles, mu.density, f"p-harmonic measure density, p={acfg.p}"))
    cen = measure_centroid(mu)
    print(f"Gamma = {gamma(K, acfg):.10g}")
    print(f"total mass = {mu.total_mass:.10g}")
    print(f"Lq total mass (q={q}) = {muq.total_mass:.10g}")
    print(f"centroid = ({cen[0]:.3e}, {cen[1]:.3e})")
    _report(args, "pass", t0, paths, _digest(K.h.tobytes(), acfg))
    return 0


def cmd_verify(args, cfg) -> int:
    t0 = time.time()
    grid = make_grid(cfg.M)
    acfg = cfg.annulus_config()
    names = args.suite or list(suites.SUITES)
    rows = []
    for name in names:
        fn = suites.SUITES[name]
        try:
            checks = fn(grid, acfg, seed=cfg.seed) if name == "translation" else fn(grid, acfg)
        except PharmonicError as exc:
            checks = [suites.Check(name, f"aborted: {exc}", float("nan"), float("nan"), False)]
        for c in checks:
            print(c.line())
            rows.append((c.suite, c.case, c.value, c.tol, c.passed))
    path = _out(cfg, args, "verify.csv")
    _write_csv(path, ["suite", "case", "value", "tol", "passed"], rows)
    failed = [r for r in rows if not r[4]]
    outcome = "pass" if not failed else "fail"
    if failed:
        print(f"{len(failed)} check(s) failed")
    _report(args, outcome, t0, [path], _digest(cfg.to_json()))
    return 0 if not failed else EXIT_FAIL


def _floats(text: str | None, default):
    if text is None:
        return list(default)
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError("bad-option", f"expected comma-separated numbers, got {text!r}") from None


def cmd_variation(args, cfg) -> int:
    t0 = time.time()
    K = load_body(args.K, cfg.M)
    L = load_body(args.L, cfg.M)
    ps = _floats(args.ps, [cfg.annulus.p])
    qs = _floats(args.qs, [cfg.solver.q])
    steps = _floats(args.steps, [cfg.variation.delta])
    rows, series, failed = [], [], 0
    header = ["K", "L", "p", "q", "step", "fd_value", "formula_value", "rel_error", "tol", "passed", "degenerate"]
    for p in ps:
        for q in qs:
            errs = []
            for d in steps:
                r = verify_variation(K, L, q, cfg.annulus_config(p), step=d, richardson=cfg.variation.richardson,
                                     tol=cfg.variation.tol_var, K_id=args.K, L_id=args.L)
                flag = " (degenerate: both sides vanish)" if r.degenerate else ""
                print(f"p={p} q={q} step={d}: fd={r.fd_value:.8g} formula={r.formula_value:.8g} rel={r.rel_error:.3g}{flag}")
                rows.append((args.K, args.L, p, q, d, r.fd_value, r.formula_value, r.rel_error, r.tol, r.passed, r.degenerate))
                failed += (not r.passed) and not r.degenerate
                errs.append(max(r.rel_error, 1e-16))
            series.append((f"p={p} q={q}", steps, errs))
    path = _out(cfg, args, "variation.csv")
    plot = _out(cfg, args, "variation.svg")
    _write_csv(path, header, rows)
    _write_text(plot, svg.line_plot(series, "variation: relative error vs step", "step", "relative error", True, True))
    _report(args, "pass" if not failed else "fail", t0, [path, plot], _digest(K.h.tobytes(), L.h.tobytes(), ps, qs, steps))
    return 0 if not failed else EXIT_FAIL


def _write_solution(sol, cfg, args, stem, extra_paths=()):
    body_path = args.out or _out(cfg, args, f"{stem}.json")
    _write_text(body_path, json.dumps({**support_function_to_json(sol.omega), "c": sol.c,
                                       "residual": sol.residual, "rescaled_to_unit": sol.rescaled_to_unit}, indent=1) + "\n")
    diag = os.path.splitext(body_path)[0] + "_diagnostics.csv"
    _write_csv(diag, ["iter", "objective", "residual", "gamma"],
               [(d["iter"], d["objective"], d["residual"], d["gamma"]) for d in sol.diagnostics])
    plot = os.path.splitext(body_path)[0] + "_trace.svg"
    it = [d["iter"] for d in sol.diagnostics]
    _write_text(plot, svg.line_plot([("residual", it, [max(d["residual"], 1e-16) for d in sol.diagnostics])],
                                    "stationarity residual", "iteration", "residual", False, True))
    return [body_path, diag, plot, *extra_paths]


def _run_solver(mu, p, q, cfg, args):
    acfg = cfg.annulus_config(p)
    if args.rescale_c1:
        minkowski.rescale_to_unit_constant(support_of_ball(1.0, grid=mu.grid), 1.0, p, q, acfg.n)  # fail fast
    sol = minkowski.solve(mu, p, q, acfg, cfg.solver_options())
    print(f"iterations = {sol.iterations}, residual = {sol.residual:.4g}, c = {sol.c:.8g}, c_fit = {sol.c_fit:.8g}")
    if args.rescale_c1:
        sol = minkowski.rescaled_solution(sol, mu, p, q, acfg)
        print(f"rescaled to c = 1: residual = {sol.residual:.4g}")
    return sol, acfg


def cmd_solve(args, cfg) -> int:
    t0 = time.time()
    mu = read_measure_csv(args.target)
    if mu.grid.M != cfg.M:
        cfg = replace(cfg, M=mu.grid.M)
    p = cfg.annulus.p if args.p is None else args.p
    q = cfg.solver.q if args.q is None else args.q
    sol, _ = _run_solver(mu, p, q, cfg, args)
    paths = _write_solution(sol, cfg, args, "body")
    ok = sol.converged and (not sol.rescaled_to_unit or sol.residual <= cfg.solver.tol_solve + 0.02)
    _report(args, "pass" if ok else "no-convergence", t0, paths, _digest(mu.density.tobytes(), p, q))
    return 0 if ok else 3


def cmd_roundtrip(args, cfg) -> int:
    t0 = time.time()
    K = load_body(args.body, cfg.M)
    p = cfg.annulus.p if args.p is None else args.p
    q = cfg.solver.q if args.q is None else args.q
    acfg = cfg.annulus_config(p)
    mu = minkowski.synth_target(K, p, q, acfg)
    target_path = _out(cfg, args, "target.csv")
    write_measure_csv(mu, target_path)
    sol, acfg = _run_solver(mu, p, q, cfg, args)
    Kn = minkowski.normalize_gamma(K, acfg)
    On = minkowski.normalize_gamma(sol.omega, acfg) if sol.rescaled_to_unit else sol.omega
    err = hausdorff(On, Kn) / Kn.h.max()
    print(f"recovery: relative Hausdorff distance after Gamma-normalisation = {err:.4g}")
    print(f"objective(solution) = {minkowski.objective(sol.omega, mu, q):.10g}, "
          f"objective(normalised input) = {minkowski.objective(Kn, mu, q):.10g}")
    paths = _write_solution(sol, cfg, args, "roundtrip", [target_path])
    ok = sol.converged
    _report(args, "pass" if ok else "no-convergence", t0, paths, _digest(K.h.tobytes(), p, q))
    return 0 if ok else 3


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pharmonic", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--grid", type=int, dest="M", help="number of directions M")
    ap.add_argument("--ns", type=int, dest="annulus_Ns")
    ap.add_argument("--ntheta", type=int, dest="annulus_Ntheta")
    ap.add_argument("--rho", type=float, dest="annulus_rho", help="absolute obstacle radius")
    ap.add_argument("--rho-factor", type=float, dest="annulus_rho_factor")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out-dir", dest="output_dir")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    m = sub.add_parser("measure", help="p-harmonic and L_q measures of a body")
    m.add_argument("--body", required=True)
    m.add_argument("--p", type=float, dest="annulus_p")
    m.add_argument("--q", type=float)

    v = sub.add_parser("verify", help="run the invariant suites")
    v.add_argument("--suite", action="append", choices=sorted(suites.SUITES))

    va = sub.add_parser("variation", help="finite-difference check of the variational formula")
    va.add_argument("--K", required=True)
    va.add_argument("--L", required=True)
    va.add_argument("--p", dest="ps", help="comma-separated p values")
    va.add_argument("--q", dest="qs", help="comma-separated q values")
    va.add_argument("--steps", help="comma-separated FD steps")

    for name in ("solve", "roundtrip"):
        s = sub.add_parser(name, help="L_q Minkowski problem" if name == "solve" else "synthesise a target and solve")
        if name == "solve":
            s.add_argument("--target", required=True)
        else:
            s.add_argument("--body", required=True)
        s.add_argument("--p", type=float)
        s.add_argument("--q", type=float)
        s.add_argument("--rescale-c1", action="store_true")
        s.add_argument("--out")
        s.add_argument("--max-outer", type=int, dest="solver_max_outer")
        s.add_argument("--tol-solve", type=float, dest="solver_tol_solve")
    return ap


COMMANDS = {
    "measure": cmd_measure,
    "verify": cmd_verify,
    "variation": cmd_variation,
    "solve": cmd_solve,
    "roundtrip": cmd_roundtrip,
}

_OVERRIDES = ("M", "seed", "output_dir", "annulus_Ns", "annulus_Ntheta", "annulus_rho", "annulus_rho_factor", "annulus_p",
              "solver_max_outer", "solver_tol_solve")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_mod.load(args.config) if args.config else config_mod.RunConfig()
        cfg = config_mod.override(cfg, **{k: getattr(args, k, None) for k in _OVERRIDES})
        try:
            os.makedirs(cfg.output_dir, exist_ok=True)
        except OSError as exc:
            raise InputOutputError("io", str(exc)) from exc
        return COMMANDS[args.command](args, cfg)
    except PharmonicError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
