"""Weak-contraction machinery on grid functions.

Grid functions are ordered pointwise by the cone of nonnegative functions:
``u <= v`` iff ``v - u >= 0`` at every node. The fixed-point engine records,
step by step, the successive differences and whether the iterates climb in
that order, which is what the convergence argument for ``x -> Ax + By``
relies on.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fracops import GridFunction, _check_same_grid

log = logging.getLogger(__name__)

TOL_ORDER = 1e-12

ScalarFn = Callable[[float], float]


@dataclass(frozen=True)
class ContractionTriple:
    """Control functions ``(psi, theta, phi)`` of a weak contraction.

    ``psi(|Ax - Ay|) <= theta(|x - y|) - phi(|x - y|)`` with the gap
    ``psi - theta + phi`` strictly positive away from zero. Semi-continuity of
    the three functions is an analytic property the caller vouches for.

    ``gap`` may supply a cancellation-free evaluation of ``psi - theta + phi``;
    without it the gap is formed by subtraction.
    """

    psi: ScalarFn
    theta: ScalarFn
    phi: ScalarFn
    gap: ScalarFn | None = None

    def gap_at(self, t: float) -> float:
        if self.gap is not None:
            return float(self.gap(t))
        return float(self.psi(t)) - float(self.theta(t)) + float(self.phi(t))


def _t_minus_arctan(t: float) -> float:
    # series t^3/3 - t^5/5 + ... avoids total cancellation for small t
    if abs(t) < 1e-2:
        t2 = t * t
        return t * t2 * (1 / 3 - t2 * (1 / 5 - t2 * (1 / 7 - t2 / 9)))
    return t - math.atan(t)


def arctan_triple() -> ContractionTriple:
    """``psi(t) = t``, ``theta(t) = arctan t``, ``phi = 0``, the triple behind the arctan bound on ``f``."""
    return ContractionTriple(
        psi=lambda t: t,
        theta=math.atan,
        phi=lambda t: 0.0,
        gap=_t_minus_arctan,
    )


@dataclass
class TripleValidation:
    zero_at_zero: bool
    psi_nondecreasing: bool
    gap_positive: bool
    min_gap: float
    min_gap_at: float
    samples: int
    t_max: float
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.zero_at_zero and self.psi_nondecreasing and self.gap_positive


def validate_triple(c: ContractionTriple, t_max: float, samples: int = 1000) -> TripleValidation:
    """Sampled check of the necessary conditions on a contraction triple.

    Samples a log-spaced ladder on ``(t_max * 1e-9, t_max]`` and checks
    ``psi(0) = theta(0) = phi(0) = 0``, that ``psi`` is non-decreasing along
    the ladder, and that the gap is strictly positive at every sample.
    """
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")

    ladder = np.logspace(math.log10(t_max) - 9, math.log10(t_max), samples)
    ladder[-1] = t_max

    zeros = (float(c.psi(0.0)), float(c.theta(0.0)), float(c.phi(0.0)))
    psi = np.array([float(c.psi(t)) for t in ladder])
    gaps = np.array([c.gap_at(t) for t in ladder])
    i = int(np.argmin(gaps))

    return TripleValidation(
        zero_at_zero=all(z == 0.0 for z in zeros),
        psi_nondecreasing=bool(np.all(np.diff(psi) >= 0)),
        gap_positive=bool(np.all(gaps > 0)),
        min_gap=float(gaps[i]),
        min_gap_at=float(ladder[i]),
        samples=samples,
        t_max=float(t_max),
        notes=["semi-continuity is not checked by sampling"],
    )


def partial_le(u: GridFunction, v: GridFunction, tol_order: float = TOL_ORDER) -> bool:
    """``u <= v`` in the cone order, with slack ``tol_order`` for round-off."""
    _check_same_grid(u, v)
    return bool(np.all(v.values - u.values >= -tol_order))


def upper_bound(u: GridFunction, v: GridFunction) -> GridFunction:
    """Pointwise maximum, the least common upper bound of ``u`` and ``v``."""
    _check_same_grid(u, v)
    return GridFunction(u.grid, np.maximum(u.values, v.values))


@dataclass
class IterationTrace:
    diffs: list[float] = field(default_factory=list)
    monotone_order: list[bool] = field(default_factory=list)
    converged: bool = False

    @property
    def steps(self) -> int:
        return len(self.diffs)

    def record(self, diff: float, ordered: bool) -> None:
        self.diffs.append(float(diff))
        self.monotone_order.append(bool(ordered))

    def strictly_decreasing(self, tol: float) -> bool:
        """Whether each diff above ``tol`` is followed by a strictly smaller one."""
        d = self.diffs
        return all(d[k + 1] < d[k] for k in range(len(d) - 1) if d[k] > tol)

    def to_dict(self) -> dict:
        return {
            "steps": self.steps,
            "converged": self.converged,
            "diffs": list(self.diffs),
            "monotone_order": list(self.monotone_order),
        }


class IterationError(RuntimeError):
    """The iteration map failed; ``trace`` holds the steps completed so far."""

    def __init__(self, message: str, trace: IterationTrace):
        super().__init__(message)
        self.trace = trace


def iterate_fixed_point(
    fmap: Callable[[GridFunction], GridFunction],
    x_start: GridFunction,
    tol: float,
    max_iter: int,
    tol_order: float = TOL_ORDER,
) -> tuple[GridFunction, IterationTrace]:
    """Successive substitution ``x_{n+1} = fmap(x_n)``.

    Stops once ``||x_n - x_{n+1}|| <= tol`` in the max norm, or after
    ``max_iter`` steps. Returns the last iterate and the trace.
    """
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")

    trace = IterationTrace()
    x = x_start
    for _ in range(max_iter):
        try:
            x_next = fmap(x)
        except Exception as exc:
            raise IterationError(f"map failed at step {trace.steps + 1}: {exc}", trace) from exc
        diff = (x_next - x).norm()
        trace.record(diff, partial_le(x, x_next, tol_order))
        x = x_next
        if diff <= tol:
            trace.converged = True
            break
    log.debug("fixed point iteration: %d steps, last diff %.3e", trace.steps, trace.diffs[-1])
    return x, trace
