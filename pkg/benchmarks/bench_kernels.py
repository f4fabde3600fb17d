"""Compare the compiled and pure-Python scalar kernels.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Both backends implement identical algorithms with identical tolerances,
so results are checked to agree bit-for-bit before timing.
"""

import time

import numpy as np

from mixupgeom import kernels
from mixupgeom.kernels import pure

PARAMS = [(10, 9.0, 1e-6), (3, 1.0, 1e-2), (5, 9.0, 1e-4)]
LAMBDAS = np.linspace(0.02, 0.98, 25)


def check_agreement():
    if kernels.BACKEND == "pure":
        print("compiled backend unavailable; nothing to compare")
        return False
    for C, m2, lh in PARAMS:
        assert kernels.solve_same_class_k(C, m2, lh) == pure.solve_same_class_k(
            C, m2, lh
        )
        for lam in LAMBDAS:
            assert kernels.solve_diff_k(C, m2, lh, lam) == pure.solve_diff_k(
                C, m2, lh, lam
            )
    print("backends agree bit-for-bit on the benchmark grid")
    return True


def bench(module, label, repeats=5):
    best = float("inf")
    solves = 0
    for _ in range(repeats):
        start = time.perf_counter()
        solves = 0
        for C, m2, lh in PARAMS:
            module.solve_same_class_k(C, m2, lh)
            solves += 1
            for lam in LAMBDAS:
                module.solve_diff_k(C, m2, lh, lam)
                solves += 1
        best = min(best, time.perf_counter() - start)
    per_solve = best / solves * 1e6
    print(f"{label:10s} {best * 1e3:8.2f} ms total   {per_solve:8.1f} us/solve")
    return best


def main():
    have_fast = check_agreement()
    t_pure = bench(pure, "pure")
    if have_fast:
        t_fast = bench(kernels, kernels.BACKEND)
        print(f"speedup: {t_pure / t_fast:.1f}x")


if __name__ == "__main__":
    main()
