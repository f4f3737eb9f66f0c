"""Grid-refinement study for the fractional operators.

Prints, for a range of grid sizes, the worst power-rule error of the
quadrature and the interior error of D^a I^a sin - sin.

    python3 scripts/convergence_study.py --alpha 0.5 --sizes 250 500 1000 2000 4000
"""

import argparse

import numpy as np

from fhde.fracops import Grid, power_rule_oracle, rl_derivative, rl_integral


def power_rule_error(n: int, alpha: float) -> float:
    grid = Grid(0.0, 1.0, n)
    worst = 0.0
    for p in (0, 1, 2):
        v = rl_integral(grid.sample(lambda s: s**p), alpha)
        exact = np.array([power_rule_oracle(p, alpha, s) for s in grid.nodes])
        worst = max(worst, float(np.max(np.abs(v.values - exact))))
    return worst


def inverse_error(n: int, alpha: float, skip: int = 5) -> float:
    grid = Grid(0.0, 1.0, n)
    u = grid.sample(np.sin)
    d = rl_derivative(rl_integral(u, alpha), alpha)
    return float(np.max(np.abs(d.values - u.values)[skip : n - skip + 1]))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[250, 500, 1000, 2000, 4000])
    args = ap.parse_args()

    print(f"{'n':>6} {'power-rule':>12} {'D I sin':>12} {'ratio':>7}")
    prev = None
    for n in args.sizes:
        pr, inv = power_rule_error(n, args.alpha), inverse_error(n, args.alpha)
        ratio = f"{prev / inv:7.2f}" if prev else " " * 7
        print(f"{n:>6} {pr:12.3e} {inv:12.3e} {ratio}")
        prev = inv


if __name__ == "__main__":
    main()
