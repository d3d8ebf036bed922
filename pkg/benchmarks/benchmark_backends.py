#!/usr/bin/env python3
"""Benchmark the numba hot kernels against the pure-numpy fallbacks.

Run:  python benchmarks/benchmark_backends.py [--quick]

Times grid KDE evaluation, multivariate mean-shift ascent and the
weighted 1-d mean-shift used by modal regression.  Numba timings exclude
the first (compiling) call.
"""

import argparse
import time

import numpy as np

from modalkit import backend


def _time(fn, *args, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    opts = ap.parse_args()

    if not backend.HAS_NUMBA:
        print("numba unavailable (or MODAL_NUMBA=0): nothing to compare")
        return

    rng = np.random.default_rng(0)
    scale = 0.25 if opts.quick else 1.0
    n = int(50_000 * scale)
    m = int(2_048 * scale)
    data1 = rng.normal(0.0, 1.0, n)
    grid1 = np.linspace(-4, 4, m)
    data2 = rng.normal(0.0, 1.0, (int(4000 * scale), 2))
    starts2 = data2[: int(800 * scale)].copy()
    h2 = np.array([0.3, 0.3])
    ys = rng.normal(0.0, 1.0, int(4000 * scale))
    w = np.exp(-0.5 * rng.uniform(0, 4, ys.shape[0]))
    starts1 = np.linspace(-2, 2, int(256 * scale))

    cases = [
        (
            "kde_1d (grid eval)",
            (grid1, data1, 0.2),
            backend.kde_1d_numba,
            backend.NUMPY_IMPLS["kde_1d"],
        ),
        (
            "kde_grad_1d",
            (grid1, data1, 0.2),
            backend.kde_grad_1d_numba,
            backend.NUMPY_IMPLS["kde_grad_1d"],
        ),
        (
            "mean_shift_nd (2-d)",
            (starts2, data2, h2, 1e-6, 500),
            backend.mean_shift_nd_numba,
            backend.NUMPY_IMPLS["mean_shift_nd"],
        ),
        (
            "weighted_mean_shift_1d",
            (starts1, ys, w, 0.2, 1e-6, 500),
            backend.weighted_mean_shift_1d_numba,
            backend.NUMPY_IMPLS["weighted_mean_shift_1d"],
        ),
        (
            "deriv_stats_1d (sizer row)",
            (grid1, data1, 0.2),
            backend.deriv_stats_1d_numba,
            backend.NUMPY_IMPLS["deriv_stats_1d"],
        ),
    ]

    print(f"{'kernel':<28}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for name, args, nb, npy in cases:
        nb(*args)  # compile outside the timed region
        t_nb = _time(nb, *args)
        t_np = _time(npy, *args)
        print(f"{name:<28}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
