"""Arithmetic expressions over the variables ``t``, ``x`` and ``y``.

Grammar (``^`` is right associative, unary minus binds looser than ``^``)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-'? base
    base   := atom ('^' factor)?
    atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'

``pi`` and ``e`` are predefined constants. Evaluation works on floats and on
numpy arrays alike; domain violations raise :class:`ExprEvalError` instead of
propagating NaN.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Binary",
    "Call",
    "Constant",
    "Expr",
    "ExprError",
    "ExprEvalError",
    "ExprSyntaxError",
    "FUNCTIONS",
    "Unary",
    "Variable",
    "evaluate",
    "parse",
    "to_source",
    "variables",
]

VARIABLES = ("t", "x", "y")
CONSTANTS = {"pi": math.pi, "e": math.e}

# name -> (arity, numpy implementation)
FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "tan": (1, np.tan),
    "tanh": (1, np.tanh),
    "arctan": (1, np.arctan),
    "exp": (1, np.exp),
    "log": (1, np.log),
    "sqrt": (1, np.sqrt),
    "abs": (1, np.abs),
    "min": (2, np.minimum),
    "max": (2, np.maximum),
}

_BINARY_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}
_SYMBOL_BINARY = {v: k for k, v in _BINARY_SYMBOL.items()}


class ExprError(Exception):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, src: str = ""):
        self.message = message
        self.offset = offset
        self.src = src
        super().__init__(f"{message} at offset {offset}")


class ExprEvalError(ExprError, ArithmeticError):
    def __init__(self, message: str, node: "Expr", operands: tuple = ()):
        self.node = node
        self.operands = operands
        super().__init__(f"{message} in {to_source(node)}")


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    child: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]


Expr = Union[Constant, Variable, Unary, Binary, Call]


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos, src)
        if m.lastgroup != "ws":
            tokens.append(_Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: _Token | None = None):
        tok = tok or self.tok
        found = repr(tok.text) if tok.kind != "end" else "end of input"
        raise ExprSyntaxError(f"{message}, found {found}", tok.offset, self.src)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            self.error(f"expected '{text}'")

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            self.error("expected operator or end of input")
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = _SYMBOL_BINARY[self.advance().text]
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = _SYMBOL_BINARY[self.advance().text]
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.accept("-"):
            return Unary("neg", self.base())
        return self.base()

    def base(self) -> Expr:
        node = self.atom()
        if self.accept("^"):
            node = Binary("pow", node, self.factor())
        return node

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Constant(float(tok.text))
        if tok.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(tok)
            if tok.text in VARIABLES:
                return Variable(tok.text)
            if tok.text in CONSTANTS:
                return Constant(CONSTANTS[tok.text])
            if tok.text in FUNCTIONS:
                self.error(f"expected '(' after function '{tok.text}'")
            raise ExprSyntaxError(f"unknown name '{tok.text}'", tok.offset, self.src)
        if self.accept("("):
            node = self.expr()
            self.expect(")")
            return node
        self.error("expected number, name or '('")

    def call(self, name: _Token) -> Expr:
        if name.text not in FUNCTIONS:
            raise ExprSyntaxError(f"unknown function '{name.text}'", name.offset, self.src)
        self.expect("(")
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name.text][0]
        if len(args) != arity:
            raise ExprSyntaxError(
                f"function '{name.text}' takes {arity} argument(s), got {len(args)}",
                name.offset,
                self.src,
            )
        return Call(name.text, tuple(args))


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0, src)
    return _Parser(src).parse()


def to_source(e: Expr) -> str:
    """Canonical fully parenthesized serialization; ``parse`` inverts it exactly."""
    if isinstance(e, Constant):
        v = e.value
        return repr(v) if math.copysign(1.0, v) > 0 else f"(-{repr(-v)})"
    if isinstance(e, Variable):
        return e.name
    if isinstance(e, Unary):
        return f"(-{to_source(e.child)})"
    if isinstance(e, Binary):
        return f"({to_source(e.left)}{_BINARY_SYMBOL[e.op]}{to_source(e.right)})"
    if isinstance(e, Call):
        return f"{e.name}({','.join(to_source(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> frozenset[str]:
    """Names of the variables referenced by ``e``."""
    if isinstance(e, Variable):
        return frozenset({e.name})
    if isinstance(e, Unary):
        return variables(e.child)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return frozenset().union(*(variables(a) for a in e.args))
    return frozenset()


def _checked(value, node: Expr, args: tuple):
    if not np.all(np.isfinite(value)):
        raise ExprEvalError("non-finite result", node, args)
    return value


def _eval(e: Expr, env: dict):
    if isinstance(e, Constant):
        return e.value
    if isinstance(e, Variable):
        try:
            return env[e.name]
        except KeyError:
            raise ExprEvalError(f"no binding for variable '{e.name}'", e) from None
    if isinstance(e, Unary):
        return -_eval(e.child, env)

    if isinstance(e, Binary):
        lhs = _eval(e.left, env)
        rhs = _eval(e.right, env)
        if e.op == "div" and np.any(rhs == 0):
            raise ExprEvalError("division by zero", e, (lhs, rhs))
        if e.op == "pow" and np.any((np.asarray(lhs) == 0) & (np.asarray(rhs) < 0)):
            raise ExprEvalError("zero raised to a negative power", e, (lhs, rhs))
        with np.errstate(all="ignore"):
            if e.op == "add":
                out = np.add(lhs, rhs)
            elif e.op == "sub":
                out = np.subtract(lhs, rhs)
            elif e.op == "mul":
                out = np.multiply(lhs, rhs)
            elif e.op == "div":
                out = np.divide(lhs, rhs)
            else:
                out = np.power(np.asarray(lhs, dtype=np.float64), rhs)
        return _checked(out, e, (lhs, rhs))

    if isinstance(e, Call):
        args = tuple(_eval(a, env) for a in e.args)
        if e.name == "log" and np.any(np.asarray(args[0]) <= 0):
            raise ExprEvalError("log of a non-positive argument", e, args)
        if e.name == "sqrt" and np.any(np.asarray(args[0]) < 0):
            raise ExprEvalError("sqrt of a negative argument", e, args)
        with np.errstate(all="ignore"):
            out = FUNCTIONS[e.name][1](*args)
        return _checked(out, e, args)

    raise TypeError(f"not an expression node: {e!r}")


def evaluate(e: Expr, t=0.0, x=0.0, y=0.0):
    """Evaluate ``e`` in double precision.

    Bindings may be floats or numpy arrays (broadcast together). A scalar
    evaluation returns a Python float, an array evaluation an ndarray.
    """
    env = {"t": t, "x": x, "y": y}
    scalar = all(np.ndim(v) == 0 for v in env.values())
    if scalar:
        env = {k: np.float64(v) for k, v in env.items()}
    out = _eval(e, env)
    if scalar:
        return float(out)
    shape = np.broadcast_shapes(*(np.shape(v) for v in env.values()))
    return np.broadcast_to(np.asarray(out, dtype=np.float64), shape)
