r"""Hybrid integral equation solver for fractional hybrid differential equations.

The problem

.. math::

    D^\alpha[x(t) - f(t, x(t))] = g(t, x(t), I^\beta x(t)), \qquad x(t_0) = x_0,

is solved through its integral form :math:`x = Ax + Bx` with

.. math::

    Ax(t) = x_0 - f(t_0, x_0) + f(t, x(t)), \qquad
    By(t) = I^\alpha\big[g(\cdot, y, I^\beta y)\big](t).

For a frozen ``y`` the inner problem ``x = Ax + By`` is solved either by
Picard iteration from ``x = 0`` or by nodewise bisection on the strictly
increasing map ``xi -> xi - f(t, xi)``. The outer loop iterates
``y -> (I - A)^{-1} B y`` until successive iterates agree.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import exprlang
from .contraction import IterationTrace, TOL_ORDER, iterate_fixed_point
from .exprlang import Expr
from .fracops import Grid, GridFunction, gamma, rl_integral

log = logging.getLogger(__name__)

MODES = ("picard", "rootfind")
STATUSES = ("converged", "max_iter_exceeded", "hypothesis_violation")

HYPOTHESIS_SLACK = 1e-9
STRICT_INCREASE = 1e-12
RESIDUAL_TOL = 1e-6
BOUND_SLACK = 1e-9

_ROLE_VARIABLES = {"f": {"t", "x"}, "g": {"t", "x", "y"}, "h": {"t"}}


class SolveError(RuntimeError):
    """An inner solve did not converge; ``trace`` holds what was done."""

    def __init__(self, message: str, trace: Optional[IterationTrace] = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ProblemSpec:
    """One problem instance on ``J = [t0, t0 + a]``.

    ``f`` may use ``t, x``; ``g`` may use ``t, x, y`` where ``y`` stands for
    ``I^beta x``; ``h`` bounds ``g`` from above and may only use ``t``.
    """

    name: str
    t0: float
    a: float
    x0: float
    alpha: float
    beta: float
    f: Expr
    g: Expr
    h: Expr
    grid_n: int = 512
    tol: float = 1e-10
    max_iter: int = 50
    mode: str = "rootfind"
    x_range: Optional[tuple[float, float]] = None

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if int(self.grid_n) != self.grid_n or self.grid_n < 2:
            raise ValueError(f"grid_n must be an integer >= 2, got {self.grid_n}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be an integer >= 1, got {self.max_iter}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.x_range is not None:
            lo, hi = self.x_range
            if not lo < hi:
                raise ValueError(f"x_range must be an increasing pair, got {self.x_range}")
            object.__setattr__(self, "x_range", (float(lo), float(hi)))
        for role, allowed in _ROLE_VARIABLES.items():
            extra = exprlang.variables(getattr(self, role)) - allowed
            if extra:
                raise ValueError(
                    f"{role} may only use {sorted(allowed)}, but uses {sorted(extra)}"
                )

    @classmethod
    def from_strings(cls, f: str, g: str, h: str, **kwargs) -> "ProblemSpec":
        return cls(f=exprlang.parse(f), g=exprlang.parse(g), h=exprlang.parse(h), **kwargs)

    @property
    def grid(self) -> Grid:
        return Grid(self.t0, self.a, self.grid_n)

    def f_at(self, t, x):
        return exprlang.evaluate(self.f, t=t, x=x)

    def g_at(self, t, x, y):
        return exprlang.evaluate(self.g, t=t, x=x, y=y)

    def h_at(self, t):
        return exprlang.evaluate(self.h, t=t)

    @property
    def shift(self) -> float:
        """The constant ``x0 - f(t0, x0)`` in the integral form."""
        return self.x0 - self.f_at(self.t0, self.x0)


@dataclass(frozen=True)
class Bounds:
    L: float
    h_norm: float
    M: float

    def to_dict(self) -> dict:
        return {"L": self.L, "h_norm": self.h_norm, "M": self.M}


@dataclass
class HypothesisCheck:
    name: str
    verdict: str  # "pass" | "fail" | "unchecked"
    margin: float = math.nan
    witness: dict = field(default_factory=dict)
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "margin": self.margin,
            "witness": dict(self.witness),
            "detail": self.detail,
        }


@dataclass
class HypothesisReport:
    checks: dict[str, HypothesisCheck]
    f_nondecreasing: HypothesisCheck

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, c in self.checks.items() if c.verdict == "fail"]

    def to_dict(self) -> dict:
        out = {k: c.to_dict() for k, c in self.checks.items()}
        out["advisory_f_nondecreasing"] = self.f_nondecreasing.to_dict()
        out["all_passed"] = self.all_passed
        return out


@dataclass
class SolveReport:
    solution: GridFunction
    residual: float
    iterations_outer: int
    inner_traces: list[IterationTrace]
    bounds: Bounds
    hypothesis: HypothesisReport
    status: str
    outer_diffs: list[float] = field(default_factory=list)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def operator_A(x: GridFunction, spec: ProblemSpec) -> GridFunction:
    return x.with_values(spec.shift + spec.f_at(x.t, x.values))


def operator_B(y: GridFunction, spec: ProblemSpec) -> GridFunction:
    w = rl_integral(y, spec.beta)
    q = spec.g_at(y.t, y.values, w.values)
    return rl_integral(y.with_values(q), spec.alpha)


def compute_bounds(spec: ProblemSpec) -> Bounds:
    """A priori bound ``M`` on solutions of the integral form.

    ``M = |x0 - f(t0, x0)| + pi/2 + L + a^alpha ||h|| / Gamma(alpha + 1)``
    with ``L = max f(t, 0)`` and ``||h|| = max |h(t)|`` over the grid.
    """
    t = spec.grid.nodes
    L = float(np.max(spec.f_at(t, 0.0)))
    h_norm = float(np.max(np.abs(spec.h_at(t))))
    M = abs(spec.shift) + math.pi / 2 + L + spec.a**spec.alpha * h_norm / gamma(spec.alpha + 1)
    return Bounds(L=L, h_norm=h_norm, M=M)


def _bisect_nodes(spec: ProblemSpec, t: np.ndarray, rhs: np.ndarray, radius: float,
                  tol_order: float = TOL_ORDER) -> tuple[np.ndarray, IterationTrace]:
    """Solve ``xi - f(t_i, xi) = rhs_i`` at every node by bracketing bisection."""

    def resid(xi):
        return xi - spec.f_at(t, xi) - rhs

    r0 = max(abs(radius), 1.0)
    r = r0
    while True:
        lo = np.full_like(rhs, -r)
        hi = np.full_like(rhs, r)
        glo, ghi = resid(lo), resid(hi)
        bracketed = np.sign(glo) * np.sign(ghi) <= 0
        if np.all(bracketed):
            break
        r *= 2.0
        if r > 10.0 * r0:
            i = int(np.argmin(bracketed))
            raise SolveError(
                f"no sign change of xi - f(t, xi) - rhs on [{-10 * r0:g}, {10 * r0:g}] at t={t[i]:g}"
            )

    trace = IterationTrace()
    mid = 0.5 * (lo + hi)
    gmid = resid(mid)
    for _ in range(2000):
        left = np.sign(gmid) == np.sign(glo)
        lo = np.where(left, mid, lo)
        glo = np.where(left, gmid, glo)
        hi = np.where(left, hi, mid)
        new = 0.5 * (lo + hi)
        done = (new == lo) | (new == hi) | (gmid == 0)
        new = np.where(gmid == 0, mid, new)
        diff = float(np.max(np.abs(new - mid)))
        trace.record(diff, bool(np.all(new - mid >= -tol_order)))
        mid = new
        gmid = resid(mid)
        if np.all(done):
            trace.converged = True
            break
    return mid, trace


def inner_solve(y: GridFunction, spec: ProblemSpec, mode: Optional[str] = None,
                bounds: Optional[Bounds] = None) -> tuple[GridFunction, IterationTrace]:
    """Solve ``x = Ax + By`` for fixed ``y``."""
    mode = mode or spec.mode
    by = operator_B(y, spec)

    if mode == "picard":
        x, trace = iterate_fixed_point(
            lambda u: operator_A(u, spec) + by, y.grid.zeros(), spec.tol, spec.max_iter
        )
        if not trace.converged:
            raise SolveError(
                f"picard iteration did not reach tol={spec.tol:g} in {spec.max_iter} steps", trace
            )
        return x, trace

    if mode == "rootfind":
        bounds = bounds or compute_bounds(spec)
        xi, trace = _bisect_nodes(spec, y.t, spec.shift + by.values, bounds.M)
        return y.with_values(xi), trace

    raise ValueError(f"unknown mode {mode!r}, expected one of {MODES}")


def hie_residual(x: GridFunction, spec: ProblemSpec) -> float:
    """Max-norm defect of ``x`` in the integral equation ``x = Ax + Bx``."""
    return (x - operator_A(x, spec) - operator_B(x, spec)).norm()


def check_hypotheses(
    spec: ProblemSpec,
    nt: int = 64,
    nx: int = 64,
    ny: int = 16,
    x_range: Optional[tuple[float, float]] = None,
    bounds: Optional[Bounds] = None,
    slack: float = HYPOTHESIS_SLACK,
) -> HypothesisReport:
    """Audit the existence hypotheses on a sampled box.

    H1: ``x - f(t, x)`` strictly increasing in ``x``.
    H2: ``|f(t, x) - f(t, x')| <= arctan |x - x'|``.
    H3: ``f(t, 0) - f(t0, x0) + x0 >= 0``.
    H4: ``0 <= g(t, x, y) <= h(t)``.

    ``x`` is sampled on ``x_range``: the argument, else ``spec.x_range``,
    else ``[0, M]``, the part of the cone of nonnegative functions where
    solutions reached from ``x = 0`` live. ``y`` is sampled on the image of
    that range under ``I^beta``, i.e. ``[0, a^beta x_hi / Gamma(beta + 1)]``
    for a nonnegative range. Sampling cannot prove a hypothesis, only refute it.
    """
    if min(nt, nx, ny) < 2:
        raise ValueError("each sampling count must be at least 2")
    x_range = x_range or spec.x_range
    if x_range is None:
        bounds = bounds or compute_bounds(spec)
        x_range = (0.0, bounds.M)
    x_lo, x_hi = map(float, x_range)

    ts = np.linspace(spec.t0, spec.t0 + spec.a, nt)
    xs = np.linspace(x_lo, x_hi, nx)
    scale = spec.a**spec.beta / gamma(spec.beta + 1)
    ys = np.linspace(scale * min(x_lo, 0.0), scale * max(x_hi, 0.0), ny)

    T, X = np.meshgrid(ts, xs, indexing="ij")
    fx = spec.f_at(T, X)
    checks = {}

    # H1
    F = X - fx
    steps = np.diff(F, axis=1)
    i, j = np.unravel_index(np.argmin(steps), steps.shape)
    margin = float(steps[i, j])
    checks["H1"] = HypothesisCheck(
        "H1",
        "pass" if margin > STRICT_INCREASE else "fail",
        margin,
        {"t": ts[i], "x": xs[j], "x_next": xs[j + 1], "F": F[i, j], "F_next": F[i, j + 1]},
        "min over adjacent samples of F_t(x') - F_t(x), x < x'",
    )

    # H2
    df = np.abs(fx[:, :, None] - fx[:, None, :])
    dx = np.abs(xs[:, None] - xs[None, :])
    gap = np.arctan(dx)[None, :, :] - df
    i, j, k = np.unravel_index(np.argmin(gap), gap.shape)
    margin = float(gap[i, j, k])
    checks["H2"] = HypothesisCheck(
        "H2",
        "pass" if margin >= -slack else "fail",
        margin,
        {"t": ts[i], "x": xs[j], "x_other": xs[k], "abs_df": df[i, j, k],
         "arctan_abs_dx": float(np.arctan(dx[j, k]))},
        "min over sample pairs of arctan|x - x'| - |f(t, x) - f(t, x')|",
    )

    # H3
    lhs = spec.f_at(ts, 0.0) - spec.f_at(spec.t0, spec.x0) + spec.x0
    i = int(np.argmin(lhs))
    margin = float(lhs[i])
    checks["H3"] = HypothesisCheck(
        "H3",
        "pass" if margin >= -slack else "fail",
        margin,
        {"t": ts[i], "value": margin},
        "min over t of f(t, 0) - f(t0, x0) + x0",
    )

    # H4
    T3, X3, Y3 = np.meshgrid(ts, xs, ys, indexing="ij")
    g = spec.g_at(T3, X3, Y3)
    h = np.broadcast_to(spec.h_at(ts), (nt,))[:, None, None]
    lower, upper = g, h - g
    il = np.unravel_index(np.argmin(lower), lower.shape)
    iu = np.unravel_index(np.argmin(upper), upper.shape)
    if lower[il] <= upper[iu]:
        idx, side, margin = il, "lower", float(lower[il])
    else:
        idx, side, margin = iu, "upper", float(upper[iu])
    i, j, k = idx
    checks["H4"] = HypothesisCheck(
        "H4",
        "pass" if margin >= -slack else "fail",
        margin,
        {"t": ts[i], "x": xs[j], "y": ys[k], "g": float(g[idx]), "h": float(h[i, 0, 0]),
         "side": side},
        "min over the box of min(g, h - g)",
    )

    for c in checks.values():
        c.witness = {k: float(v) if not isinstance(v, str) else v for k, v in c.witness.items()}

    inc = np.diff(fx, axis=1)
    i, j = np.unravel_index(np.argmin(inc), inc.shape)
    margin = float(inc[i, j])
    advisory = HypothesisCheck(
        "f_nondecreasing",
        "pass" if margin >= -slack else "fail",
        margin,
        {"t": float(ts[i]), "x": float(xs[j]), "x_next": float(xs[j + 1])},
        "min over adjacent samples of f(t, x') - f(t, x); advisory only",
    )
    return HypothesisReport(checks, advisory)


def outer_solve(
    spec: ProblemSpec,
    strict: bool = False,
    mode: Optional[str] = None,
    residual_tol: float = RESIDUAL_TOL,
    check: bool = True,
) -> SolveReport:
    """Iterate ``y_{k+1} = inner_solve(y_k)`` from ``y_0 = 0`` to a fixed point.

    Never raises on non-convergence; the outcome is reported in ``status``.
    With ``strict`` a failed hypothesis stops the solve before iterating.
    """
    mode = mode or spec.mode
    bounds = compute_bounds(spec)
    hyp = check_hypotheses(spec, bounds=bounds) if check else HypothesisReport(
        {k: HypothesisCheck(k, "unchecked") for k in ("H1", "H2", "H3", "H4")},
        HypothesisCheck("f_nondecreasing", "unchecked"),
    )
    y = spec.grid.zeros()

    if strict and hyp.failed:
        msg = f"hypotheses failed: {', '.join(hyp.failed)}"
        log.warning("%s: %s", spec.name, msg)
        return SolveReport(y, hie_residual(y, spec), 0, [], bounds, hyp,
                           "hypothesis_violation", message=msg)

    traces: list[IterationTrace] = []
    diffs: list[float] = []
    converged = False
    message = ""
    for k in range(1, spec.max_iter + 1):
        try:
            x, trace = inner_solve(y, spec, mode=mode, bounds=bounds)
        except SolveError as exc:
            if exc.trace is not None:
                traces.append(exc.trace)
            message = f"inner solve failed at outer iteration {k}: {exc}"
            break
        traces.append(trace)
        diffs.append((x - y).norm())
        y = x
        log.info("%s: outer %d, diff %.3e, inner steps %d", spec.name, k, diffs[-1], trace.steps)
        if diffs[-1] <= spec.tol:
            converged = True
            break
    else:
        message = f"outer iteration did not reach tol={spec.tol:g} in {spec.max_iter} steps"

    residual = hie_residual(y, spec)
    if not converged:
        status = "max_iter_exceeded"
    elif residual > residual_tol:
        status = "max_iter_exceeded"
        message = f"residual {residual:.3e} exceeds {residual_tol:g}"
    elif y.norm() > bounds.M + BOUND_SLACK:
        status = "hypothesis_violation"
        message = f"solution norm {y.norm():.6g} exceeds the a priori bound M={bounds.M:.6g}"
    else:
        status = "converged"
    if status != "converged":
        log.warning("%s: %s", spec.name, message)

    return SolveReport(y, residual, len(diffs), traces, bounds, hyp, status, diffs, message)
