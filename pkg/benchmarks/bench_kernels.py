"""Benchmark the numba copula kernels against the pure numpy fallback.

Runs each hot kernel (log-densities, h-functions, bisection-based
h-inverses) on large arrays under both backends and prints a timing table.
The numba path is warmed up first so JIT compilation is not billed.

Usage: python benchmarks/bench_kernels.py [--n 1000000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from gamdvqr import _kernels_numpy as knp

try:
    from gamdvqr import _kernels_numba as knb
except ImportError:
    knb = None


def bench(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    u = rng.uniform(1e-6, 1 - 1e-6, args.n)
    v = rng.uniform(1e-6, 1 - 1e-6, args.n)
    p = rng.uniform(1e-6, 1 - 1e-6, args.n)
    params = {
        "gaussian": rng.uniform(-0.9, 0.9, args.n),
        "clayton": rng.uniform(0.1, 8.0, args.n),
        "gumbel": rng.uniform(1.0, 6.0, args.n),
        "frank": rng.uniform(-25.0, 25.0, args.n),
    }
    # h-inverse bisection is ~200x the work per element; keep it tractable
    n_inv = max(args.n // 50, 1)

    cases = []
    for name, th in params.items():
        cases.append((f"{name}_logpdf", (u, v, th)))
        cases.append((f"{name}_hfunc", (u, v, th)))
        cases.append((f"{name}_hinv", (p[:n_inv], v[:n_inv], th[:n_inv])))

    if knb is not None:
        for name, call_args in cases:  # JIT warmup on tiny slices
            getattr(knb, name)(*[a[:8] for a in call_args])

    header = f"{'kernel':18s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for name, call_args in cases:
        t_np = bench(getattr(knp, name), call_args, args.repeats)
        if knb is None:
            print(f"{name:18s} {t_np * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>8s}")
            continue
        t_nb = bench(getattr(knb, name), call_args, args.repeats)
        print(f"{name:18s} {t_np * 1e3:9.1f}ms {t_nb * 1e3:9.1f}ms "
              f"{t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
