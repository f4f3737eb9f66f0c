"""Exit criteria for the package, one test per criterion.

Each test records a PASS/FAIL line that pytest prints in an
"acceptance criteria" section of the terminal summary.
"""

import json
import math
import random
import time

import numpy as np

from fhde.cli import cmd_solve, read_csv
from fhde.contraction import ContractionTriple, arctan_triple, validate_triple
from fhde.exprlang import (
    FUNCTIONS,
    Binary,
    Call,
    Constant,
    ExprEvalError,
    Unary,
    Variable,
    evaluate,
    parse,
    to_source,
)
from fhde.fracops import Grid, GridFunction, gamma, rl_derivative, rl_integral
from fhde.problemfile import builtin_path
from fhde.solver import check_hypotheses, compute_bounds, hie_residual, inner_solve, outer_solve

from conftest import make_example

STATED_M = 5.236238


def scalar_bisection(fn, lo, hi, iters=200):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_ac1_power_rule(acceptance):
    start = time.perf_counter()
    worst = 0.0
    grid = Grid(0.0, 1.0, 2000)
    t = grid.nodes
    for p in (0, 1, 2):
        for alpha in (0.3, 0.5, 0.9):
            v = rl_integral(grid.sample(lambda s: s**p), alpha)
            exact = gamma(p + 1) / gamma(p + alpha + 1) * t ** (p + alpha)
            worst = max(worst, float(np.max(np.abs(v.values - exact))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and elapsed < 5.0
    acceptance("AC1 quadrature power rule", ok, f"max error {worst:.2e} <= 1e-3, {elapsed:.2f}s < 5s")
    assert ok


def test_ac2_derivative_inverts_integral(acceptance):
    errors = {}
    for n in (500, 1000, 2000, 4000):
        grid = Grid(0.0, 1.0, n)
        u = grid.sample(np.sin)
        d = rl_derivative(rl_integral(u, 0.5), 0.5)
        errors[n] = float(np.max(np.abs(d.values - u.values)[5 : n - 4]))
    seq = [errors[n] for n in sorted(errors)]
    decreasing = all(b < a for a, b in zip(seq, seq[1:]))
    ok = errors[2000] <= 5e-2 and decreasing
    detail = ", ".join(f"n={n}: {e:.2e}" for n, e in errors.items())
    acceptance("AC2 D^a I^a f = f", ok, f"{detail}; monotone={decreasing}")
    assert ok


def test_ac3_example_end_to_end(acceptance):
    results = []
    start = time.perf_counter()
    for beta in (0.5, 1.0, 2.0):
        spec = make_example(beta=beta, grid_n=512)
        r = outer_solve(spec)
        m = compute_bounds(spec).M
        results.append((beta, r, m))
    elapsed = time.perf_counter() - start
    ok = elapsed < 10.0
    for beta, r, m in results:
        ok &= (
            r.status == "converged"
            and r.residual <= 1e-6
            and r.iterations_outer <= 50
            and r.solution.norm() <= STATED_M
            and r.solution.norm() <= m + 1e-9
        )
    detail = "; ".join(
        f"beta={b}: {r.status}, res {r.residual:.1e}, outer {r.iterations_outer}, "
        f"|x| {r.solution.norm():.4f}"
        for b, r, _ in results
    )
    acceptance("AC3 example end to end", ok, f"{detail}; {elapsed:.2f}s < 10s")
    assert ok


def test_ac4_hypothesis_audit(acceptance):
    good = check_hypotheses(make_example())
    bad = check_hypotheses(make_example(f="2*x"))
    h2 = bad.checks["H2"]
    dx = abs(h2.witness["x"] - h2.witness["x_other"])
    witness_ok = 2 * dx > math.atan(dx) and h2.witness["abs_df"] > h2.witness["arctan_abs_dx"]
    ok = good.all_passed and h2.verdict == "fail" and witness_ok
    acceptance(
        "AC4 hypothesis audit",
        ok,
        f"example {'all pass' if good.all_passed else good.failed}; f=2x H2 {h2.verdict} "
        f"at x={h2.witness['x']:.3f}, x'={h2.witness['x_other']:.3f}",
    )
    assert ok


def test_ac5_contraction_triple(acceptance):
    reports = {t_max: validate_triple(arctan_triple(), t_max) for t_max in (1.0, 100.0, 1e6)}
    degenerate = validate_triple(ContractionTriple(lambda t: t, lambda t: t, lambda t: 0.0), 100.0)
    ok = all(r.passed and r.min_gap > 0 for r in reports.values()) and not degenerate.passed
    detail = ", ".join(f"t_max={k:g}: min gap {r.min_gap:.2e}" for k, r in reports.items())
    acceptance("AC5 contraction triple", ok, f"{detail}; (t, t, 0) fails={not degenerate.passed}")
    assert ok


def test_ac6_iteration_laws(acceptance):
    spec = make_example()
    y = spec.grid.zeros()
    xp, trace = inner_solve(y, spec, mode="picard")
    xr, _ = inner_solve(y, spec, mode="rootfind")
    decreasing = trace.strictly_decreasing(spec.tol)
    ordered = all(trace.monotone_order)
    gap = (xp - xr).norm()
    ok = trace.converged and decreasing and ordered and gap <= 1e-8
    acceptance(
        "AC6 iteration laws",
        ok,
        f"{trace.steps} steps, decreasing={decreasing}, ordered={ordered}, |picard-rootfind| {gap:.1e}",
    )
    assert ok


def test_ac7_oracle_at_one(acceptance):
    spec = make_example()
    root = scalar_bisection(lambda s: s - math.tanh(1.0) * math.atan(s + 1.0), -10.0, 10.0)
    errs = {}
    for mode in ("picard", "rootfind"):
        x, _ = inner_solve(spec.grid.zeros(), spec, mode=mode)
        assert x.t[-1] == 1.0
        errs[mode] = abs(x.values[-1] - root)
    ok = max(errs.values()) <= 1e-8
    acceptance("AC7 oracle at t=1", ok, f"root {root:.10f}, errors {errs}")
    assert ok


def _random_tree(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return Constant(rng.uniform(-100, 100))
        return Variable(rng.choice("txy"))
    kind = rng.randrange(4)
    if kind == 0:
        return Unary("neg", _random_tree(rng, depth - 1))
    if kind == 1:
        op = rng.choice(["add", "sub", "mul", "div", "pow"])
        return Binary(op, _random_tree(rng, depth - 1), _random_tree(rng, depth - 1))
    name = rng.choice(sorted(FUNCTIONS))
    arity = FUNCTIONS[name][0]
    return Call(name, tuple(_random_tree(rng, depth - 1) for _ in range(arity)))


def _outcome(e, b):
    try:
        return evaluate(e, **b)
    except ExprEvalError:
        return "error"


def test_ac8_parser(acceptance):
    fixtures = {"2+3*4": 14.0, "2^3^2": 512.0, "-2^2": -4.0}
    precedence = all(evaluate(parse(s)) == v for s, v in fixtures.items())
    h1 = evaluate(parse("t^2*exp(t)"), t=1.0)
    f = evaluate(parse("tanh(t)*arctan(x+1)"), t=1.0, x=0.0)
    g = evaluate(parse("t^2*exp(t)*abs(sin(x))*y/(1+y)"), t=1.0, x=1.0, y=1.0)
    examples = (
        abs(h1 - math.e) <= 1e-12
        and abs(f - math.tanh(1) * math.pi / 4) <= 1e-15
        and abs(g - math.e * math.sin(1.0) / 2) <= 1e-15
    )

    rng = random.Random(20201)
    mismatches = 0
    errors = 0
    for _ in range(1000):
        e = _random_tree(rng, 6)
        b = {k: rng.uniform(-10, 10) for k in "txy"}
        expected = _outcome(e, b)
        errors += expected == "error"
        mismatches += _outcome(parse(to_source(e)), b) != expected
    ok = precedence and examples and mismatches == 0
    acceptance(
        "AC8 parser",
        ok,
        f"precedence={precedence}, example values={examples}, "
        f"round-trip mismatches {mismatches}/1000 ({errors} evaluate to domain errors)",
    )
    assert ok


def test_ac9_cli_determinism(acceptance, tmp_path):
    codes = [cmd_solve(builtin_path(), tmp_path / f"x{i}.csv", tmp_path / f"r{i}.json") for i in (1, 2)]
    identical = (tmp_path / "x1.csv").read_bytes() == (tmp_path / "x2.csv").read_bytes()
    spec = make_example()
    _, x = read_csv(tmp_path / "x1.csv")
    recomputed = hie_residual(GridFunction(spec.grid, x), spec)
    reported = json.loads((tmp_path / "r1.json").read_text())["residual"]
    ok = codes == [0, 0] and identical and abs(recomputed - reported) <= 1e-12
    acceptance(
        "AC9 CLI determinism",
        ok,
        f"exit codes {codes}, identical CSV={identical}, |residual diff| {abs(recomputed - reported):.1e}",
    )
    assert ok
