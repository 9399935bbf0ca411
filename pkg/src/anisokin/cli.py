"""Command line front end: ``anisokin <subcommand>``.

Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 invariant violation.
"""

import argparse
import csv
import json
import sys

import numpy as np

from .errors import (ConfigError, ConvergenceError, InvariantViolation, ParameterError, SpectralError, StepRejected,
                     StructuralError)

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 2, 3, 4


def _cmd_run(args):
    from .config import parse_config
    from .coupler import run

    cfg = parse_config(args.config)
    result = run(cfg)
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_mms(args):
    from .mms import np_mms, poisson_mms

    if args.problem == "poisson":
        study = poisson_mms(tuple(args.sizes), strength=args.strength)
    else:
        study = np_mms(tuple(args.sizes), strength=args.strength, sign=args.sign)
    w = csv.writer(sys.stdout)
    w.writerow(["n", "l2_error", "order"])
    for n, e, o in study.rows():
        w.writerow([n, repr(float(e)), repr(float(o))])
    return EXIT_OK


def _cmd_audit(args):
    from .energy import EnergyLedger, residual_series
    from .state import Constants

    k = Constants(Re=args.Re, Pe=args.Pe, alpha=args.alpha, beta=args.beta, gamma=args.gamma)
    ledger = EnergyLedger.read_csv(args.ledger, k)
    rho = residual_series(ledger)
    t = ledger.column("t")
    dt = float(np.min(np.diff(t))) if len(t) > 1 else 0.0
    stored = ledger.column("residual")
    out = dict(rows=len(ledger), max_rho=float(rho.max()), max_abs_rho=float(np.abs(rho).max()),
               stored_mismatch=float(np.abs(rho - stored).max()), dt=dt,
               c_run=float(max(rho.max(), 0.0) / dt) if dt > 0 else 0.0)
    print(json.dumps(out, indent=2, sort_keys=True))
    if args.bound is not None and rho.max() > args.bound * dt:
        print(f"energy residual {rho.max():.3e} exceeds {args.bound:g}*dt", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_sweep(args):
    from .config import parse_config
    from .coupler import kappa_sweep

    report = kappa_sweep(parse_config(args.config), args.kappas)
    w = csv.DictWriter(sys.stdout, fieldnames=["kappa", "v", "c_plus", "c_minus", "psi", "total"])
    w.writeheader()
    for r in report.rows():
        w.writerow({k: repr(v) for k, v in r.items()})
    print(f"# rate {report.rate!r} monotone {report.monotone()}")
    return EXIT_OK


def _cmd_resolvent(args):
    from .anisotropy import preset_director
    from .grid import Grid
    from .regularizers import build_dense_robin, build_dense_stokes, resolvent_suite

    grid = Grid(args.grid, args.grid)
    if args.kind == "stokes":
        A = build_dense_stokes(grid)
    else:
        A = build_dense_robin(grid, preset_director(args.preset, grid).permittivity(), args.tau)
    report = resolvent_suite(A, trials=args.trials, seed=args.seed)
    report.write_csv(sys.stdout)
    for f in report.failures:
        print(f"# failure: {f}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_INVARIANT


def _cmd_surface(args):
    from .surface import surface_check

    w = csv.writer(sys.stdout)
    w.writerow(["check", "samples", "value"])
    for name, m, val in surface_check(args.curve, args.samples, args.method):
        w.writerow([name, m, repr(val)])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="anisokin", description="Anisotropic electrokinetic flow toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a configured simulation")
    r.add_argument("config")
    r.set_defaults(fn=_cmd_run)

    m = sub.add_parser("mms", help="manufactured-solution convergence study")
    m.add_argument("problem", choices=("poisson", "np"))
    m.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    m.add_argument("--strength", type=float, default=1.0)
    m.add_argument("--sign", type=int, choices=(1, -1), default=1)
    m.set_defaults(fn=_cmd_mms)

    a = sub.add_parser("audit", help="recompute the energy residual of a ledger CSV")
    a.add_argument("ledger")
    for name in ("Re", "Pe", "alpha", "beta", "gamma"):
        a.add_argument(f"--{name}", type=float, default=1.0)
    a.add_argument("--bound", type=float, default=None, help="fail if max residual exceeds BOUND*dt")
    a.set_defaults(fn=_cmd_audit)

    s = sub.add_parser("sweep", help="distance to the unregularized run over several kappas")
    s.add_argument("config")
    s.add_argument("--kappas", type=float, nargs="+", required=True)
    s.set_defaults(fn=_cmd_sweep)

    rs = sub.add_parser("resolvent-suite", help="dense resolvent property checks")
    rs.add_argument("--grid", type=int, default=8)
    rs.add_argument("--kind", choices=("stokes", "robin"), default="robin")
    rs.add_argument("--preset", default="vortex")
    rs.add_argument("--tau", type=float, default=1.0)
    rs.add_argument("--trials", type=int, default=10)
    rs.add_argument("--seed", type=int, default=0)
    rs.set_defaults(fn=_cmd_resolvent)

    sc = sub.add_parser("surface-check", help="surface calculus identities on a closed curve")
    sc.add_argument("--curve", choices=("circle", "ellipse"), default="circle")
    sc.add_argument("--samples", type=int, default=256)
    sc.add_argument("--method", choices=("fd4", "spectral"), default="spectral")
    sc.set_defaults(fn=_cmd_surface)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ParameterError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        _report_dump(exc)
        return EXIT_INVARIANT
    except (ConvergenceError, StepRejected, SpectralError, StructuralError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        _report_dump(exc)
        return EXIT_SOLVER


def _report_dump(exc):
    path = getattr(exc, "dump_path", None)
    if path:
        print(f"last good state written to {path}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
