"""Problem files: one flat TOML table per problem.

Required keys are ``name, t0, a, x0, alpha, beta, f, g, h, grid_n, max_iter,
tol``; ``mode`` (``"picard"`` or ``"rootfind"``) and ``x_range`` (the state
interval sampled by the hypothesis audit) are optional.
"""

from __future__ import annotations

import sys
from importlib import resources
from pathlib import Path

from . import exprlang
from .solver import ProblemSpec

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

REQUIRED = ("name", "t0", "a", "x0", "alpha", "beta", "f", "g", "h", "grid_n", "max_iter", "tol")
OPTIONAL = ("mode", "x_range")

BUILTIN_EXAMPLE = "tanh_arctan.toml"


class ProblemFileError(ValueError):
    pass


def builtin_path(name: str = BUILTIN_EXAMPLE) -> Path:
    """Path of a problem file shipped with the package."""
    return Path(str(resources.files("fhde") / "data" / name))


def _number(doc: dict, key: str) -> float:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ProblemFileError(f"'{key}' must be a number, got {v!r}")
    return float(v)


def _integer(doc: dict, key: str) -> int:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ProblemFileError(f"'{key}' must be an integer, got {v!r}")
    return v


def _expression(doc: dict, key: str) -> exprlang.Expr:
    v = doc[key]
    if not isinstance(v, str):
        raise ProblemFileError(f"'{key}' must be an expression string, got {v!r}")
    try:
        return exprlang.parse(v)
    except exprlang.ExprSyntaxError as exc:
        raise ProblemFileError(f"'{key}': syntax error: {exc}") from exc


def problem_from_dict(doc: dict, **overrides) -> ProblemSpec:
    """Build a validated :class:`ProblemSpec`; ``overrides`` replace file values."""
    missing = [k for k in REQUIRED if k not in doc]
    if missing:
        raise ProblemFileError(f"missing keys: {', '.join(missing)}")
    unknown = sorted(set(doc) - set(REQUIRED) - set(OPTIONAL))
    if unknown:
        raise ProblemFileError(f"unknown keys: {', '.join(unknown)}")

    fields = {
        "name": str(doc["name"]),
        "f": _expression(doc, "f"),
        "g": _expression(doc, "g"),
        "h": _expression(doc, "h"),
        "grid_n": _integer(doc, "grid_n"),
        "max_iter": _integer(doc, "max_iter"),
        "mode": doc.get("mode", "rootfind"),
    }
    for key in ("t0", "a", "x0", "alpha", "beta", "tol"):
        fields[key] = _number(doc, key)
    if "x_range" in doc:
        xr = doc["x_range"]
        if not (isinstance(xr, list) and len(xr) == 2):
            raise ProblemFileError(f"'x_range' must be a pair of numbers, got {xr!r}")
        fields["x_range"] = (_number({"x": xr[0]}, "x"), _number({"x": xr[1]}, "x"))

    fields.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ProblemSpec(**fields)
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from exc


def load_problem(path, **overrides) -> ProblemSpec:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ProblemFileError(f"{path}: {exc}") from exc
    return problem_from_dict(doc, **overrides)
