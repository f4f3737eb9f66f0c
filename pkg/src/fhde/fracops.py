r"""Riemann-Liouville fractional integrals and derivatives on uniform grids.

The fractional integral of order :math:`\alpha > 0` with lower limit :math:`t_0`

.. math::

    I^\alpha u(t) = \frac{1}{\Gamma(\alpha)} \int_{t_0}^t (t - s)^{\alpha - 1} u(s) \,\mathrm{d}s

is discretized by product trapezoidal quadrature: ``u`` is replaced by its
piecewise-linear interpolant on the grid, which is then integrated exactly
against the singular kernel. The resulting weights only depend on the distance
between nodes, so a full transform is a single discrete convolution.

For :math:`0 < \alpha < 1` the derivative is :math:`D^\alpha = \frac{d}{dt} I^{1 - \alpha}`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Grid",
    "GridFunction",
    "gamma",
    "power_rule_oracle",
    "product_trapezoid_weights",
    "rl_derivative",
    "rl_integral",
]

# largest x with finite Gamma(x) in double precision
GAMMA_OVERFLOW = 171.6243769563027


@dataclass(frozen=True)
class Grid:
    """Uniform mesh ``t_i = t0 + i * a / n`` for ``i = 0..n`` on ``[t0, t0 + a]``."""

    t0: float
    a: float
    n: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t0) and math.isfinite(self.a)):
            raise ValueError(f"grid bounds must be finite: t0={self.t0}, a={self.a}")
        if self.a <= 0:
            raise ValueError(f"interval length must be positive: a={self.a}")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"need an integer n >= 2 subintervals: n={self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.a / self.n

    @property
    def size(self) -> int:
        return self.n + 1

    @property
    def nodes(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n + 1, dtype=np.float64)

    def sample(self, fn) -> GridFunction:
        """Evaluate a vectorized callable at the nodes."""
        return GridFunction(self, np.broadcast_to(fn(self.nodes), (self.size,)))

    def zeros(self) -> GridFunction:
        return GridFunction(self, np.zeros(self.size))

    def full(self, value: float) -> GridFunction:
        return GridFunction(self, np.full(self.size, float(value)))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples ``values[i] = u(t_i)`` of a real function on a :class:`Grid`.

    ``unreliable`` lists node indices whose values are known to be inaccurate,
    e.g. the left endpoint of a fractional derivative.
    """

    grid: Grid
    values: np.ndarray
    unreliable: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"expected {self.grid.size} values for {self.grid}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def norm(self) -> float:
        """Maximum norm over the nodes."""
        return float(np.max(np.abs(self.values)))

    def with_values(self, values) -> GridFunction:
        return GridFunction(self.grid, values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __add__(self, other: GridFunction) -> GridFunction:
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __len__(self) -> int:
        return self.grid.size


def _check_same_grid(u: GridFunction, v: GridFunction) -> None:
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")


def gamma(x: float) -> float:
    """Gamma function for positive real arguments.

    Raises :class:`ValueError` for ``x <= 0`` and :class:`OverflowError` when
    the result is not representable as a double.
    """
    x = float(x)
    if not x > 0:
        raise ValueError(f"gamma is only defined here for x > 0, got {x}")
    if x > GAMMA_OVERFLOW:
        raise OverflowError(f"gamma({x}) exceeds the double precision range")
    return math.gamma(x)


def power_rule_oracle(p: float, alpha: float, t: float) -> float:
    r"""Exact :math:`I^\alpha t^p = \Gamma(p + 1) / \Gamma(p + \alpha + 1) t^{p + \alpha}` with ``t0 = 0``."""
    if p < 0 or alpha <= 0 or t < 0:
        raise ValueError(f"need p >= 0, alpha > 0, t >= 0; got p={p}, alpha={alpha}, t={t}")
    return gamma(p + 1) / gamma(p + alpha + 1) * t ** (p + alpha)


def product_trapezoid_weights(alpha: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    r"""Unscaled product trapezoidal weights for an order ``alpha`` integral.

    With :math:`c = h^\alpha / \Gamma(\alpha + 2)` the quadrature at node ``k`` is

    .. math::

        I^\alpha u(t_k) \approx c \Big[ a_k u_0 + \sum_{j=1}^{k-1} w_{k-j} u_j + u_k \Big].

    Returns ``(w, a)``, both of length ``n + 1`` (``w[0]`` and ``a[0]`` are unused
    and set to zero). The second differences of :math:`m^{\alpha+1}` are formed
    from ``expm1``/``log1p`` so that the weights keep full relative accuracy
    for large ``m``.
    """
    if alpha <= 0:
        raise ValueError(f"integration order must be positive, got {alpha}")
    p = alpha + 1.0
    m = np.arange(1, n + 1, dtype=np.float64)

    # (m + 1)^p - m^p for m = 0..n
    fwd = np.empty(n + 1)
    fwd[0] = 1.0
    fwd[1:] = m**p * np.expm1(p * np.log1p(1.0 / m))

    w = np.zeros(n + 1)
    w[1:] = fwd[1:] - fwd[:-1]

    # (k - 1)^p - (k - 1 - alpha) k^alpha, rewritten around k^p
    a = np.zeros(n + 1)
    with np.errstate(divide="ignore"):
        a[1:] = m**p * (np.expm1(p * np.log1p(-1.0 / m)) + (1.0 + alpha) / m)
    return w, a


def rl_integral(u: GridFunction, alpha: float) -> GridFunction:
    """Riemann-Liouville integral of order ``alpha > 0`` with lower limit ``grid.t0``.

    Exact for piecewise-linear ``u``; node 0 is always zero.
    """
    if not alpha > 0:
        raise ValueError(f"integration order must be positive, got {alpha}")
    grid = u.grid
    n = grid.n
    w, a = product_trapezoid_weights(alpha, n)

    tail = u.values.copy()
    tail[0] = 0.0
    out = np.convolve(w, tail)[: n + 1] + a * u.values[0] + tail
    out[0] = 0.0
    out *= grid.h**alpha / gamma(alpha + 2.0)
    return GridFunction(grid, out)


def rl_derivative(u: GridFunction, alpha: float) -> GridFunction:
    """Riemann-Liouville derivative of order ``0 < alpha < 1``.

    Differentiates ``rl_integral(u, 1 - alpha)`` with central differences at
    interior nodes and one-sided differences at the ends. The kernel is
    singular at ``t0``, so node 0 is marked unreliable.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"derivative order must lie in (0, 1), got {alpha}")
    v = rl_integral(u, 1.0 - alpha)
    dv = np.gradient(v.values, u.grid.h, edge_order=1)
    return GridFunction(u.grid, dv, unreliable=(0,))
