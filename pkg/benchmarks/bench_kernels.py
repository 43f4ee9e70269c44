"""Benchmark the hot kernels under the numba and numpy backends.

Run:  python benchmarks/bench_kernels.py [--repeat N]

Times one full backward pass of the finite-collective value recursion at a
few fund sizes, and a batch of binomial survivor draws, under both kernel
implementations.  The numba rows include a warm-up call so compilation time
is not measured.
"""

import argparse
import math
import time

import numpy as np

from pensionlab._backend import HAS_NUMBA
from pensionlab._kernels import (
    binomial_inverse_numpy,
    finite_value_step_numpy,
    lgamma_table,
)
from pensionlab._rng import uniforms

if HAS_NUMBA:
    from pensionlab._kernels import binomial_inverse_numba, finite_value_step_numba


def time_call(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_finite_pass(step_fn, n, n_steps=30):
    lgam = lgamma_table(n)
    s_values = np.linspace(0.995, 0.6, n_steps - 1)
    q = -0.5  # rho = -1
    logz = np.zeros(n)

    def run():
        cur = logz.copy()
        for k in range(n_steps - 1):
            cur = step_fn(cur, float(s_values[k]), lgam, -1.0, 0.04, q, 1.0 / q)
        return cur

    return run


def bench_binomial(inv_fn, draws, n0, s):
    n = np.full(draws, n0, dtype=np.int64)
    u = uniforms(11, draws, step=0, stream=1)
    lgam = lgamma_table(n0)

    def run():
        return inv_fn(n, s, u, lgam)

    return run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    rows = []
    for n in (128, 512, 1024):
        label = f"finite value pass  n={n:5d} x 30 steps"
        t_np = time_call(bench_finite_pass(finite_value_step_numpy, n), args.repeat)
        t_nb = None
        if HAS_NUMBA:
            fn = bench_finite_pass(finite_value_step_numba, n)
            fn()  # warm-up/compile
            t_nb = time_call(fn, args.repeat)
        rows.append((label, t_np, t_nb))

    for n0, s, draws in ((1000, 0.97, 100_000), (10_000, 0.9, 20_000)):
        label = f"binomial inverse   n={n0:5d} x {draws} draws"
        t_np = time_call(bench_binomial(binomial_inverse_numpy, draws, n0, s), args.repeat)
        t_nb = None
        if HAS_NUMBA:
            fn = bench_binomial(binomial_inverse_numba, draws, n0, s)
            fn()
            t_nb = time_call(fn, args.repeat)
        rows.append((label, t_np, t_nb))

    print(f"{'kernel':<42} {'numpy':>10} {'numba':>10} {'speedup':>8}")
    for label, t_np, t_nb in rows:
        if t_nb is None:
            print(f"{label:<42} {t_np*1e3:9.1f}ms {'n/a':>10} {'':>8}")
        else:
            print(f"{label:<42} {t_np*1e3:9.1f}ms {t_nb*1e3:9.1f}ms {t_np/t_nb:7.1f}x")
    if not HAS_NUMBA:
        print("numba not installed: only the numpy fallback was timed")


if __name__ == "__main__":
    main()
