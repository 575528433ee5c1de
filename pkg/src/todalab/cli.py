"""Command line entry point: ``todalab run``, ``todalab suites``,
``todalab config`` and ``todalab emit``.

Exit codes: 0 all rows pass, 1 any failing row, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import battery as bt
from . import canonical as cn
from . import jacobi as jm

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _load_config(args) -> bt.ExperimentConfig:
    cfg = bt.ExperimentConfig.from_yaml(args.config) if args.config else bt.ExperimentConfig.from_dict({})
    overrides = cfg.to_dict()
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return bt.ExperimentConfig.from_dict(overrides)


def cmd_run(args) -> int:
    cfg = _load_config(args)
    report = bt.run_battery(cfg, args.suite)
    for r in report.rows:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.suite:22s} {r.instance:24s} {r.metric:44s} {r.value:.3e} (tol {r.tolerance:.1e})")
    n_fail = sum(not r.passed for r in report.rows)
    print(f"{len(report.rows)} rows, {n_fail} failing; report at {Path(cfg.out) / 'report.json'}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_suites(args) -> int:
    for name in bt.SUITES:
        print(name)
    return EXIT_OK


def cmd_config(args) -> int:
    sys.stdout.write(yaml.safe_dump(bt.DEFAULT_CONFIG, sort_keys=False))
    return EXIT_OK


def _read_jacobi(path) -> jm.JacobiMatrix:
    try:
        return jm.JacobiMatrix.from_dict(json.loads(Path(path).read_text()))
    except (OSError, ValueError, KeyError) as exc:
        raise bt.ConfigError(f"cannot read Jacobi matrix from {path}: {exc}") from exc


def cmd_emit(args) -> int:
    if args.kind in ("m-trace", "band-set", "trajectory"):
        J = _read_jacobi(args.jacobi) if args.jacobi else jm.free()
        if args.kind == "m-trace":
            lo, hi = args.x_range
            path = bt.emit_plot_data("m-trace", J, (np.linspace(lo, hi, args.points), args.y), args.output)
        elif args.kind == "band-set":
            path = bt.emit_plot_data("band-set", J, args.points, args.output)
        else:
            p = [float(c) for c in args.poly.split(",")]
            path = bt.emit_plot_data("trajectory", (J, p), (args.t, args.steps, args.every), args.output)
    else:
        if args.hamiltonian:
            H = bt.read_hamiltonian(args.hamiltonian)
        else:
            H = cn.schrodinger_to_canonical(cn.Potential.from_function(lambda x: 0.0 * x, 0.0, args.x_max, args.dx))[0]
        path = bt.emit_plot_data("disk-radii", H, bt._complex(args.z), args.output)
    print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="todalab", description="Toda hierarchy and canonical system experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run theorem batteries and write report.json")
    run.add_argument("--config", help="YAML config file (missing keys take defaults)")
    run.add_argument("--suite", action="append", choices=list(bt.SUITES), help="suite to run (repeatable; default: all)")
    run.add_argument("--out", help="output directory")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.set_defaults(func=cmd_run)

    sub.add_parser("suites", help="list suite names").set_defaults(func=cmd_suites)
    sub.add_parser("config", help="print the default config as YAML").set_defaults(func=cmd_config)

    emit = sub.add_parser("emit", help="write one plot-ready CSV series")
    emit.add_argument("kind", choices=["m-trace", "band-set", "trajectory", "disk-radii"])
    emit.add_argument("output", help="CSV path")
    emit.add_argument("--jacobi", help="Jacobi matrix JSON (default: free a=1/2, b=0)")
    emit.add_argument("--hamiltonian", help="Hamiltonian CSV x,h11,h12,h22 (default: from V=0)")
    emit.add_argument("--x-range", nargs=2, type=float, default=(-2.0, 2.0))
    emit.add_argument("--points", type=int, default=2001)
    emit.add_argument("--y", type=float, default=1e-3)
    emit.add_argument("--poly", default="0,1", help="comma-separated flow polynomial coefficients, lowest degree first")
    emit.add_argument("--t", type=float, default=1.0)
    emit.add_argument("--steps", type=int, default=1000)
    emit.add_argument("--every", type=int, default=10)
    emit.add_argument("--z", default="1j")
    emit.add_argument("--x-max", type=float, default=40.0)
    emit.add_argument("--dx", type=float, default=1e-3)
    emit.set_defaults(func=cmd_emit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except bt.ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
