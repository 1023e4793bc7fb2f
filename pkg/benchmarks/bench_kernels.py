"""Compare the compiled golden-section kernel against the pure-python fallback.

Run:  python3 benchmarks/bench_kernels.py [--n 1000000] [--repeat 5]

The two implementations share the same arithmetic, so this is a speed
comparison plus a numerical agreement check on a common random batch.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from hob.kernels import fallback

try:
    from hob.kernels import _zie_core as compiled
except ImportError:
    compiled = None


def batch(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    pi = rng.uniform(0.0, 0.95, n)
    lam = rng.uniform(0.05, 10.0, n)
    value = rng.uniform(0.0, 100.0, n)
    return pi, lam, value


def time_fn(fn, args, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--n-iter", type=int, default=40)
    args = parser.parse_args()

    pi, lam, value = batch(args.n)
    t_py = time_fn(fallback.golden_bids, (pi, lam, value, args.n_iter), args.repeat)
    print(f"fallback golden_bids:  n={args.n}  n_iter={args.n_iter}  {t_py:8.4f} s  "
          f"({args.n / t_py / 1e6:.2f} M bids/s)")

    if compiled is None:
        print("compiled kernel not built; install with Cython available to compare")
        return

    t_c = time_fn(compiled.golden_bids, (pi, lam, value, args.n_iter), args.repeat)
    print(f"compiled golden_bids:  n={args.n}  n_iter={args.n_iter}  {t_c:8.4f} s  "
          f"({args.n / t_c / 1e6:.2f} M bids/s)")
    print(f"speedup: {t_py / t_c:.1f}x")

    bids_py = fallback.golden_bids(pi, lam, value, args.n_iter)
    bids_c = compiled.golden_bids(pi, lam, value, args.n_iter)
    gap = np.max(np.abs(bids_py - bids_c) / (1.0 + value))
    print(f"max relative bid gap: {gap:.3e}")

    for name, fn_py, fn_c in (
        ("zie_cdf", fallback.zie_cdf, compiled.zie_cdf),
        ("zie_surplus", fallback.zie_surplus, compiled.zie_surplus),
    ):
        a = (pi, lam, value * 0.5) if name == "zie_cdf" else (pi, lam, value, value * 0.5)
        t1 = time_fn(fn_py, a, args.repeat)
        t2 = time_fn(fn_c, a, args.repeat)
        print(f"{name}: fallback {t1:.4f} s, compiled {t2:.4f} s, speedup {t1 / t2:.1f}x")


if __name__ == "__main__":
    main()
