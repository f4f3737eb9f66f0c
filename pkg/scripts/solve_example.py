"""Solve a problem file over a sweep of beta values and both inner modes.

    python3 scripts/solve_example.py                 # shipped example
    python3 scripts/solve_example.py my.toml --betas 0.5 1 2 --grid-n 1024
"""

import argparse
import time

from fhde.problemfile import builtin_path, load_problem
from fhde.solver import MODES, outer_solve


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("problem", nargs="?", default=None)
    ap.add_argument("--betas", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--grid-n", type=int, default=None)
    args = ap.parse_args()
    path = args.problem or builtin_path()

    print(f"{'beta':>5} {'mode':>9} {'status':>20} {'outer':>5} {'residual':>10} "
          f"{'|x|':>8} {'M':>8} {'x(end)':>10} {'ms':>7}")
    for beta in args.betas:
        for mode in MODES:
            spec = load_problem(path, beta=beta, grid_n=args.grid_n, mode=mode)
            start = time.perf_counter()
            r = outer_solve(spec)
            ms = 1e3 * (time.perf_counter() - start)
            print(f"{beta:5.2f} {mode:>9} {r.status:>20} {r.iterations_outer:5d} "
                  f"{r.residual:10.2e} {r.solution.norm():8.4f} {r.bounds.M:8.4f} "
                  f"{r.solution.values[-1]:10.6f} {ms:7.1f}")


if __name__ == "__main__":
    main()
