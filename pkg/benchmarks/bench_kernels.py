"""Compare the numba and numpy B-spline evaluation kernels.

Usage: python3 benchmarks/bench_kernels.py [--points N] [--repeat R]
"""
import argparse
import time

import numpy as np

from mpfeec import _kernels
from mpfeec.univariate import uniform_space


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    x = rng.random(args.points)
    print(f"{'degree':>6} {'cells':>6} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max diff':>9}")
    for degree in (1, 2, 3, 5):
        for cells in (16, 256):
            S = uniform_space(degree, cells)
            ref = _kernels.basis_funs(S.knots, degree, x, which="numpy")
            got = _kernels.basis_funs(S.knots, degree, x, which="numba")
            diff = max(np.abs(ref[1] - got[1]).max(), np.abs(ref[2] - got[2]).max())
            t_np = best_of(lambda: _kernels.basis_funs(S.knots, degree, x, which="numpy"), args.repeat)
            t_nb = best_of(lambda: _kernels.basis_funs(S.knots, degree, x, which="numba"), args.repeat)
            print(f"{degree:>6} {cells:>6} {1e3 * t_np:>11.2f} {1e3 * t_nb:>11.2f} "
                  f"{t_np / t_nb:>8.2f} {diff:>9.1e}")


if __name__ == "__main__":
    main()
