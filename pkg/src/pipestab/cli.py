"""Command-line entry point: check, analyze, table, simulate, validate."""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import tempfile
import time


from . import __version__, analysis, config, sdp, sim, validate
from .errors import PipestabError, SolverFailure
from .lmi import assemble
from .model import build_closed_loop

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3


def _write_text(path: str, content: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    with tempfile.NamedTemporaryFile("w", dir=d, delete=False) as tmp:
        tmp.write(content)
    os.replace(tmp.name, path)


def _manifest(outdir: str, command: str, cfg: config.RunConfig, started: float,
              extra: dict | None = None) -> None:
    payload = {
        "command": command,
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
        "config": cfg.describe(),
    }
    if extra:
        payload.update(extra)
    _write_text(os.path.join(outdir, "manifest.json"),
                json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _resolve(args) -> config.RunConfig:
    cfg = config.load_config(args.config)
    if getattr(args, "controller", None):
        ctrl = config.controller_from_type(args.controller)
        cfg = dataclasses.replace(cfg, controller_type=args.controller, controller=ctrl,
                                  overrides=cfg.overrides + (f"cli.controller={args.controller}",))
    if getattr(args, "seed", None) is not None:
        sim_cfg = dataclasses.replace(cfg.sim, seed=args.seed)
        cfg = dataclasses.replace(cfg, seed=args.seed, sim=sim_cfg,
                                  overrides=cfg.overrides + (f"cli.seed={args.seed}",))
    return cfg


def _solve_opts(cfg: config.RunConfig) -> sdp.SolveOptions:
    return sdp.SolveOptions(margin_tol=cfg.analysis.margin_tol)


def cmd_check(args) -> int:
    started = time.time()
    cfg = _resolve(args)
    os.makedirs(args.outdir, exist_ok=True)
    N = args.order if args.order is not None else cfg.analysis.N
    amax = analysis.model.alpha_max(cfg.plant)
    print(f"feasibility at alpha = {args.alpha:.6g}, order N = {N}, "
          f"controller {cfg.controller_type}")
    if not analysis.necessary_condition(cfg.plant, cfg.controller, args.alpha):
        print(f"verdict: infeasible (exceeds alpha_max = {amax:.4g})")
        _manifest(args.outdir, "check", cfg, started,
                  {"verdict": "infeasible", "reason": f"exceeds alpha_max = {amax:.4g}"})
        return EXIT_OK
    problem = assemble(N, build_closed_loop(cfg.plant, cfg.controller), cfg.plant)
    report = sdp.solve_feasibility(problem, args.alpha, _solve_opts(cfg))
    if report.status == sdp.FAILURE:
        print(f"solver failure: {report.residuals}", file=sys.stderr)
        _manifest(args.outdir, "check", cfg, started, {"verdict": "numerical-failure"})
        return EXIT_SOLVER
    if report.status == sdp.FEASIBLE:
        cert = report.certificate
        path = os.path.join(args.outdir, "certificate.txt")
        sdp.export_instance(problem, cert, path)
        print(f"verdict: feasible (margin {cert.margin:.3e}, "
              f"{report.iterations} solver iterations)")
        print(f"certificate written to {path}")
    else:
        print(f"verdict: {report.status}")
    _manifest(args.outdir, "check", cfg, started, {"verdict": report.status})
    return EXIT_OK


def cmd_analyze(args) -> int:
    started = time.time()
    cfg = _resolve(args)
    os.makedirs(args.outdir, exist_ok=True)
    N = args.order if args.order is not None else cfg.analysis.N
    tol = args.tol if args.tol is not None else cfg.analysis.tol
    try:
        result = analysis.max_decay_rate(cfg.plant, cfg.controller, N, tol,
                                         cap=cfg.analysis.cap, opts=_solve_opts(cfg))
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    payload = {
        "N": result.N, "status": result.status, "alpha_N": result.alpha_N,
        "bracket": list(result.bracket), "alpha_max": result.alpha_max,
        "iterations": result.iterations, "controller": cfg.controller_type,
    }
    if result.status == analysis.CERTIFIED:
        print(f"certified decay rate at order N = {N} ({cfg.controller_type}):")
        print(f"  alpha_N = {result.alpha_N:.6f}   bracket "
              f"[{result.bracket[0]:.6f}, {result.bracket[1]:.6f}]   "
              f"alpha_max = {result.alpha_max:.6f}")
        cert_path = os.path.join(args.outdir, "certificate.txt")
        problem = assemble(N, build_closed_loop(cfg.plant, cfg.controller), cfg.plant)
        sdp.export_instance(problem, result.certificate, cert_path)
        print(f"  certificate written to {cert_path}")
    else:
        print(f"no certificate of asymptotic stability at order N = {N} "
              f"({cfg.controller_type})")
    _write_text(os.path.join(args.outdir, "decay_result.json"),
                json.dumps(payload, indent=2) + "\n")
    _manifest(args.outdir, "analyze", cfg, started, {"result": payload})
    return EXIT_OK


def cmd_table(args) -> int:
    started = time.time()
    cfg = _resolve(args)
    os.makedirs(args.outdir, exist_ok=True)
    tol = args.tol if args.tol is not None else cfg.analysis.tol
    ctrls = [("feedforward", config.controller_from_type("feedforward")),
             ("dynamic", config.controller_from_type("dynamic"))]
    table = analysis.hierarchy_table(cfg.plant, ctrls, args.max_order, tol,
                                     opts=_solve_opts(cfg))
    text = analysis.format_table(table)
    print(text)
    for label in table.labels:
        missing = [r.N for r in table.row(label) if r.status != analysis.CERTIFIED]
        if missing:
            print(f"note: no certificate for {label} at N in {missing}")
        if not table.row_monotone(label):
            print(f"warning: hierarchy violated for {label}")
    _write_text(os.path.join(args.outdir, "table.txt"), text + "\n")
    csv_path = os.path.join(args.outdir, "table.csv")
    tmp = csv_path + ".tmp"
    analysis.table_to_csv(table, tmp)
    os.replace(tmp, csv_path)
    print(f"table written to {csv_path}")
    _manifest(args.outdir, "table", cfg, started)
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.time()
    cfg = _resolve(args)
    os.makedirs(args.outdir, exist_ok=True)
    sim_kwargs = {}
    for key in ("M", "T", "stride", "ic"):
        val = getattr(args, key, None)
        if val is not None:
            sim_kwargs[key] = val
    sim_cfg = dataclasses.replace(cfg.sim, **sim_kwargs) if sim_kwargs else cfg.sim
    trace = sim.simulate(cfg.plant, cfg.controller, sim_cfg)
    print(f"simulated {sim_cfg.T:.6g} s on {sim_cfg.M + 1} grid points "
          f"(dt = {trace.dt:.3e} s, controller {cfg.controller_type})")
    print(f"initial boundary residuals: table {trace.ic_residuals['table']:.3e}, "
          f"bit {trace.ic_residuals['bit']:.3e}")
    csv_path = os.path.join(args.outdir, "trace.csv")
    snap_path = os.path.join(args.outdir, "snapshots.csv") if args.snapshots else None
    sim.export_csv(trace, csv_path, snap_path)
    print(f"trace written to {csv_path}")
    window = (0.2 * sim_cfg.T, 0.9 * sim_cfg.T)
    alpha_emp, r2 = sim.fit_decay(trace, window)
    print(f"empirical decay rate over [{window[0]:.6g}, {window[1]:.6g}] s: "
          f"{alpha_emp:.4f} (r^2 = {r2:.4f})")
    try:
        result = analysis.max_decay_rate(cfg.plant, cfg.controller, cfg.analysis.N,
                                         cfg.analysis.tol, cap=cfg.analysis.cap,
                                         opts=_solve_opts(cfg))
    except SolverFailure as exc:
        print(f"certificate comparison unavailable (solver failure: {exc})",
              file=sys.stderr)
        result = None
    extra = {"alpha_emp": alpha_emp, "r2": r2}
    if result is not None and result.status == analysis.CERTIFIED:
        print(f"certified rate at N = {cfg.analysis.N}: {result.alpha_N:.4f} "
              f"(empirical / certified = {alpha_emp / result.alpha_N:.3f})")
        extra["alpha_certified"] = result.alpha_N
    else:
        print(f"no certificate available at N = {cfg.analysis.N} for comparison")
    _manifest(args.outdir, "simulate", cfg, started, extra)
    return EXIT_OK


def cmd_validate(args) -> int:
    started = time.time()
    cfg = _resolve(args)
    os.makedirs(args.outdir, exist_ok=True)
    results = validate.run_all(seed=cfg.seed)
    passed = sum(r.passed for r in results)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.detail}")
    print(f"{passed}/{len(results)} checks passed")
    _manifest(args.outdir, "validate", cfg, started,
              {"passed": passed, "total": len(results)})
    return EXIT_OK if passed == len(results) else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pipestab",
        description="Decay-rate certification and simulation for a "
                    "boundary-damped drill-string model")
    parser.add_argument("--config", help="INI config file (or set PIPESTAB_CONFIG)")
    parser.add_argument("--outdir", default="pipestab-out", help="output directory")
    parser.add_argument("--seed", type=int, help="random seed override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="single feasibility verdict at a given rate")
    p.add_argument("--alpha", type=float, required=True, help="decay rate to test (1/s)")
    p.add_argument("--order", type=int, help="projection order N")
    p.add_argument("--controller", choices=["feedforward", "dynamic"])
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("analyze", help="certified maximal decay rate by bisection")
    p.add_argument("--order", type=int, help="projection order N")
    p.add_argument("--tol", type=float, help="bisection tolerance")
    p.add_argument("--controller", choices=["feedforward", "dynamic"])
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("table", help="decay rates for all orders and controllers")
    p.add_argument("--max-order", type=int, default=3, dest="max_order")
    p.add_argument("--tol", type=float, help="bisection tolerance")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("simulate", help="closed-loop finite-difference run")
    p.add_argument("--controller", choices=["feedforward", "dynamic"])
    p.add_argument("--T", type=float, help="horizon (s)")
    p.add_argument("--M", type=int, help="spatial intervals")
    p.add_argument("--stride", type=int, help="output stride")
    p.add_argument("--ic", choices=list(sim.IC_CHOICES), help="initial condition")
    p.add_argument("--snapshots", action="store_true",
                   help="also write full field snapshots")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("validate", help="run the invariant check suite")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PipestabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
