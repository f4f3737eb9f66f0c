"""Command line front end: ``fhde solve | check | frac``.

Exit codes: 0 success, 2 hypothesis violation, 3 non-convergence,
4 parse, validation, evaluation or I/O error. ``FHDE_LOG`` selects the
diagnostic verbosity (``quiet``, ``info`` or ``debug``).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import exprlang
from .fracops import Grid, rl_derivative, rl_integral
from .problemfile import ProblemFileError, builtin_path, load_problem
from .solver import check_hypotheses, compute_bounds, outer_solve

log = logging.getLogger("fhde")

EXIT_OK = 0
EXIT_HYPOTHESIS = 2
EXIT_NONCONVERGENCE = 3
EXIT_INPUT = 4

_STATUS_EXIT = {
    "converged": EXIT_OK,
    "hypothesis_violation": EXIT_HYPOTHESIS,
    "max_iter_exceeded": EXIT_NONCONVERGENCE,
}

_LOG_LEVELS = {"quiet": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("FHDE_LOG", "").lower(), logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _resolve(problem: str) -> Path:
    return builtin_path() if problem == "builtin" else Path(problem)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_csv(path, header: str, t: np.ndarray, values: np.ndarray) -> None:
    """Two-column CSV with 17 significant digits, '\\n' line endings."""
    lines = [header] + [f"{a:.17g},{b:.17g}" for a, b in zip(t.tolist(), values.tolist())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii", newline="\n")


def read_csv(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0], data[:, 1]


def cmd_solve(problem_path, out_csv, out_report, overrides: dict | None = None,
              strict: bool = False) -> int:
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    start = time.perf_counter()
    try:
        spec = load_problem(problem_path, **overrides)
        report = outer_solve(spec, strict=strict)
    except (ProblemFileError, exprlang.ExprError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    wall_ms = (time.perf_counter() - start) * 1e3

    sol = report.solution
    doc = {
        "problem": spec.name,
        "status": report.status,
        "message": report.message,
        "mode": spec.mode,
        "strict": strict,
        "overrides": overrides,
        "residual": report.residual,
        "iterations_outer": report.iterations_outer,
        "inner_iterations": [tr.steps for tr in report.inner_traces],
        "outer_diffs": report.outer_diffs,
        "M": report.bounds.M,
        "L": report.bounds.L,
        "h_norm": report.bounds.h_norm,
        "solution_norm": sol.norm(),
        "hypotheses": report.hypothesis.to_dict(),
        "solution_file": str(out_csv),
        "wall_time_ms": wall_ms,
    }
    try:
        write_csv(out_csv, "t,x", sol.t, sol.values)
        Path(out_report).write_text(json.dumps(_jsonable(doc), indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INPUT

    log.info("%s: %s, residual %.3e, %d outer iterations", spec.name, report.status,
             report.residual, report.iterations_outer)
    if report.status != "converged":
        print(f"{report.status}: {report.message}", file=sys.stderr)
    return _STATUS_EXIT[report.status]


def cmd_check(problem_path, out=None) -> int:
    out = out or sys.stdout
    try:
        spec = load_problem(problem_path)
        bounds = compute_bounds(spec)
        hyp = check_hypotheses(spec, bounds=bounds)
    except (ProblemFileError, exprlang.ExprError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    doc = {"problem": spec.name, "bounds": bounds.to_dict(), "hypotheses": hyp.to_dict()}
    print(json.dumps(_jsonable(doc), indent=2), file=out)
    return EXIT_OK if hyp.all_passed else EXIT_HYPOTHESIS


def cmd_frac(expr: str, op: str, alpha: float, t0: float, a: float, n: int, out_csv) -> int:
    try:
        e = exprlang.parse(expr)
        extra = exprlang.variables(e) - {"t"}
        if extra:
            raise ValueError(f"expression may only use t, but uses {sorted(extra)}")
        grid = Grid(t0, a, n)
        u = grid.sample(lambda t: exprlang.evaluate(e, t=t))
        if op == "integral":
            v = rl_integral(u, alpha)
        elif op == "derivative":
            v = rl_derivative(u, alpha)
        else:
            raise ValueError(f"unknown operation {op!r}")
    except (exprlang.ExprError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        write_csv(out_csv, "t,value", v.t, v.values)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhde", description="Fractional hybrid differential equation solver."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve a problem file")
    p.add_argument("problem", help="problem file, or 'builtin' for the shipped example")
    p.add_argument("--csv", default="solution.csv", help="solution CSV path")
    p.add_argument("--report", default="report.json", help="JSON run report path")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--grid-n", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--mode", choices=("picard", "rootfind"))
    p.add_argument("--strict", action="store_true", help="stop if a hypothesis fails")

    p = sub.add_parser("check", help="audit the existence hypotheses of a problem file")
    p.add_argument("problem", help="problem file, or 'builtin' for the shipped example")

    p = sub.add_parser("frac", help="fractional integral or derivative of an expression in t")
    p.add_argument("expr")
    p.add_argument("--op", choices=("integral", "derivative"), default="integral")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("-o", "--out", default="frac.csv")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging()
    if args.command == "solve":
        overrides = {
            "alpha": args.alpha,
            "beta": args.beta,
            "grid_n": args.grid_n,
            "tol": args.tol,
            "max_iter": args.max_iter,
            "mode": args.mode,
        }
        return cmd_solve(_resolve(args.problem), args.csv, args.report, overrides, args.strict)
    if args.command == "check":
        return cmd_check(_resolve(args.problem))
    return cmd_frac(args.expr, args.op, args.alpha, args.t0, args.a, args.n, args.out)


if __name__ == "__main__":
    sys.exit(main())
