#!/usr/bin/env python3
"""Timing comparison of the NumPy and compiled kernel implementations.

The kernel table always measures both implementations (when numba is
installed); the end-to-end adaptive row uses whichever path the package
dispatched at import time.  Run twice to compare full-loop behavior:

    python3 benchmarks/bench_kernels.py
    SPARSEUQ_NO_NUMBA=1 python3 benchmarks/bench_kernels.py
"""

import argparse
import time

import numpy as np

from sparseuq import kernels
from sparseuq.adaptive import run_gn
from sparseuq.fem import SpatialDiscretization, build_problem
from sparseuq.nodes import leja_nodes


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1000.0


def kernel_cases(rng):
    n = 64
    nodes = leja_nodes(n)
    mks = np.arange(n, dtype=np.int64)
    denoms = np.array(
        [np.prod(nodes[i] - np.delete(nodes[: i + 1], i)) for i in range(n)]
    )
    denoms[0] = 1.0
    ys = rng.uniform(-1.0, 1.0, size=4000)
    table = kernels.basis_table_numpy(ys, nodes, mks, denoms)
    wide = np.hstack([table, table, table])
    cols = rng.integers(0, wide.shape[1], size=(600, 3)).astype(np.int64)
    cand = rng.uniform(-1.0, 1.0, size=100_000)
    m = 255
    diag = rng.uniform(2.5, 3.5, size=m)
    off = rng.uniform(-1.0, -0.5, size=m)
    lower = off.copy()
    lower[0] = 0.0
    upper = off.copy()
    upper[-1] = 0.0
    rhs = rng.normal(size=m)
    return [
        (
            "basis_table (4000x64)",
            lambda: kernels.basis_table_numpy(ys, nodes, mks, denoms),
            lambda: kernels.basis_table_numba(ys, nodes, mks, denoms),
        ),
        (
            "weight_product (4000x600, M=3)",
            lambda: kernels.weight_product_numpy(wide, cols),
            lambda: kernels.weight_product_numba(wide, cols),
        ),
        (
            "log_product (1e5x32)",
            lambda: kernels.log_product_numpy(cand, nodes[:32]),
            lambda: kernels.log_product_numba(cand, nodes[:32]),
        ),
        (
            "thomas_solve (n=255, x100)",
            lambda: [
                kernels.thomas_solve_numpy(lower, diag, upper, rhs.copy())
                for _ in range(100)
            ],
            lambda: [
                kernels.thomas_solve_numba(lower, diag, upper, rhs.copy())
                for _ in range(100)
            ],
        ),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=7, help="best-of repetitions")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    kernels.warmup()
    print("numba available: %s, dispatched: %s" % (kernels.HAS_NUMBA, kernels.USE_NUMBA))
    print()
    print("%-32s %12s %12s %9s" % ("kernel", "numpy ms", "numba ms", "speedup"))
    for name, f_np, f_nb in kernel_cases(rng):
        t_np = best_of(f_np, args.repeat)
        if kernels.HAS_NUMBA:
            f_nb()  # compile outside the timed region
            t_nb = best_of(f_nb, args.repeat)
            print(
                "%-32s %12.3f %12.3f %8.1fx" % (name, t_np, t_nb, t_np / t_nb)
            )
        else:
            print("%-32s %12.3f %12s %9s" % (name, t_np, "-", "-"))

    problem = build_problem({"family": "cosine", "M": 2, "a0": 2.0})
    disc = SpatialDiscretization(problem, 256)
    t0 = time.perf_counter()
    trace = run_gn(problem, disc, tol=1e-7)
    dt = time.perf_counter() - t0
    print()
    print(
        "end-to-end adaptive run (M=2, tol 1e-7, %s path): %d iterations, %.2fs"
        % ("numba" if kernels.USE_NUMBA else "numpy", len(trace.rows), dt)
    )


if __name__ == "__main__":
    main()
