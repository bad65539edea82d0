#!/usr/bin/env python3
"""Benchmark the numba and numpy kernel backends against each other.

Times the two hot primitives (tie counting and comparison-kernel weighted
sums) plus an end-to-end plugin variance, for each backend, and prints the
speedups.  The literal O(n^2) pairwise kernel is timed at small n as a
reference point for what the sorted path buys.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from rankreg import kernels


def _best_of(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_primitives(backend, n, rng):
    impl = kernels.IMPLEMENTATIONS[backend]
    values = rng.normal(size=n)
    weights = rng.normal(size=n)
    # warm up (numba compiles on first call)
    impl["comparison_counts"](values[:64])
    impl["comparison_weighted_sums"](values[:64], values[:64], weights[:64], 0.5)
    t_counts = _best_of(lambda: impl["comparison_counts"](values))
    t_sums = _best_of(lambda: impl["comparison_weighted_sums"](values, values, weights, 0.5))
    return t_counts, t_sums


def bench_pairwise(backend, n, rng):
    impl = kernels.IMPLEMENTATIONS[backend]
    values = rng.normal(size=n)
    weights = rng.normal(size=n)
    impl["comparison_weighted_sums_pairwise"](values[:32], values[:32], weights[:32], 0.5)
    return _best_of(
        lambda: impl["comparison_weighted_sums_pairwise"](values, values, weights, 0.5),
        repeats=3,
    )


def bench_plugin(n, rng):
    """End-to-end fit + plugin slope variance under the active backend."""
    from rankreg import Dataset, fit_rank_rank, plugin_slope_variance

    x = rng.normal(size=n)
    y = 0.5 * x + rng.normal(size=n)
    d = Dataset(y=y, x=x, w=np.ones((n, 1)), w_names=["const"])
    fit = fit_rank_rank(d, 1.0)
    plugin_slope_variance(fit, d)  # warm-up
    return _best_of(lambda: plugin_slope_variance(fit, d))


def main():
    rng = np.random.default_rng(0)
    backends = list(kernels.IMPLEMENTATIONS)
    print(f"active backend: {kernels.backend_name()}   available: {backends}")
    print()
    header = f"{'n':>9}  {'kernel':<28}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for n in (1_000, 10_000, 100_000):
        results = {b: bench_primitives(b, n, np.random.default_rng(1)) for b in backends}
        for k, name in enumerate(("comparison_counts", "comparison_weighted_sums")):
            row = f"{n:>9}  {name:<28}"
            times = [results[b][k] for b in backends]
            row += "".join(f"{t * 1e3:>10.3f}ms" for t in times)
            if len(times) == 2:
                row += f"{times[0] / times[1]:>9.2f}x"
            print(row)
    print()
    for n in (500, 2_000):
        times = [bench_pairwise(b, n, np.random.default_rng(1)) for b in backends]
        row = f"{n:>9}  {'pairwise O(n^2) oracle':<28}"
        row += "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)
    print()
    for n in (1_000, 10_000, 100_000):
        t = bench_plugin(n, np.random.default_rng(2))
        print(f"{n:>9}  plugin slope variance (fit cached)  {t * 1e3:>10.3f}ms")


if __name__ == "__main__":
    main()
