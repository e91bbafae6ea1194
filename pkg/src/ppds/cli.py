"""Command-line entry point: ``ppds bench | regions | solve``.

Exit codes: 0 success, 2 configuration error, 3 step-size regime mismatch,
4 a run hit its iteration cap.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from ppds import bench
from ppds.config import ProblemConfigError, build_problem
from ppds.linalg import NotSpd
from ppds.solver import StepsizeRegimeMismatch, StopReason, ThetaOutOfRange, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_MAX_ITER = 4


def _write(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_bench(args):
    base = bench.PRESETS[args.preset]
    mode = {"feasible": "feasible", "raw": "raw", None: None}[args.mode]
    cfg = bench.with_overrides(
        base,
        seed=args.seed,
        realizations=args.realizations,
        n=args.n,
        m=args.m,
        N=args.nn,
        feasibility_mode=mode,
        distribution=args.distribution,
        max_iter=args.max_iter,
        tolerances=tuple(args.tol) if args.tol else None,
    )
    result = bench.run_experiment(cfg, workers=args.workers)
    text = bench.to_csv(result) if args.format == "csv" else bench.to_markdown(result)
    _write(text, args.out)
    return EXIT_MAX_ITER if any(r.flagged for r in result.rows) else EXIT_OK


def cmd_regions(args):
    records = bench.emit_region_grid(args.b, args.resolution)
    _write(bench.regions_to_csv(records), args.out)
    return EXIT_OK


def cmd_solve(args):
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ProblemConfigError(str(exc)) from exc
    problem, schedule, init, stop = build_problem(cfg)
    report = solve(problem, schedule, init=init, **stop)
    out = {
        "iterations": report.iterations,
        "stop_reason": report.stop_reason.value,
        "final_residual": float(report.residuals[-1]) if len(report.residuals) else None,
        "wall_time": report.wall_time,
        "schedule": type(schedule).__name__,
        "final_x": report.final_x.tolist(),
        "final_u": report.final_u.tolist(),
    }
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_MAX_ITER if report.stop_reason is StopReason.MAX_ITERATIONS else EXIT_OK


def make_parser():
    p = argparse.ArgumentParser(prog="ppds", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bench", help="PCP vs CP on random constrained l1 instances")
    b.add_argument("--preset", choices=sorted(bench.PRESETS), default="table2")
    b.add_argument("--seed", type=int)
    b.add_argument("--realizations", type=int)
    b.add_argument("--n", type=int, help="rows of S")
    b.add_argument("--m", type=int, help="rows of R (projected block)")
    b.add_argument("--nn", type=int, help="number of unknowns N")
    b.add_argument("--mode", choices=["feasible", "raw"])
    b.add_argument("--distribution", choices=["uniform", "gaussian"])
    b.add_argument("--tol", type=float, nargs="+", help="strictly decreasing tolerances")
    b.add_argument("--max-iter", type=int)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out")
    b.add_argument("--format", choices=["csv", "md"], default="csv")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("regions", help="step-size region grid")
    r.add_argument("--b", type=float, default=1.0)
    r.add_argument("--resolution", type=int, default=200)
    r.add_argument("--out")
    r.set_defaults(func=cmd_regions)

    s = sub.add_parser("solve", help="solve a composite problem from a JSON file")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)
    return p


def main(argv=None):
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (StepsizeRegimeMismatch, ThetaOutOfRange) as exc:
        print(f"ppds: step-size regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (bench.ConfigError, ProblemConfigError, NotSpd, KeyError, ValueError) as exc:
        print(f"ppds: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
