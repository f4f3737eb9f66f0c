"""Numerical solver and verification tools for fractional hybrid differential equations."""

from .contraction import (
    ContractionTriple,
    IterationTrace,
    arctan_triple,
    iterate_fixed_point,
    partial_le,
    upper_bound,
    validate_triple,
)
from .exprlang import evaluate, parse, to_source
from .fracops import Grid, GridFunction, gamma, power_rule_oracle, rl_derivative, rl_integral
from .problemfile import builtin_path, load_problem
from .solver import (
    Bounds,
    ProblemSpec,
    SolveReport,
    check_hypotheses,
    compute_bounds,
    hie_residual,
    inner_solve,
    operator_A,
    operator_B,
    outer_solve,
)

__version__ = "0.1.0"
