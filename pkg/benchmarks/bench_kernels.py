"""Throughput comparison of the numba and numpy kernel twins.

Runs each hot kernel (window distance scan, split-gain scan, adaptive
window cut scan) on realistic shapes with both implementations and
prints per-call times plus the speedup.  The numba path must be active
(``DRIVECAST_NUMBA`` unset or truthy, numba importable) for a
comparison; otherwise only the numpy timings appear.

    python benchmarks/bench_kernels.py [--repeat 20000]
"""

import argparse
import time

import numpy as np

from drivecast import _kernels


def time_call(fn, args, repeat):
    fn(*args)  # one warm call so jit compilation stays out of the timing
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def make_cases(rng):
    """(name, args) per kernel, shaped like the package's real call sites."""
    window = rng.normal(size=(365, 35))
    x = rng.normal(size=35)

    counts = rng.integers(0, 40, size=(35, 10)).astype(float)
    sums = counts * rng.normal(1.0, 0.3, size=(35, 10))
    sumsqs = np.abs(sums) * rng.normal(2.0, 0.2, size=(35, 10)) + counts
    buckets = rng.integers(1, 64, size=48).astype(float)
    bsums = buckets * rng.normal(0.5, 0.2, size=48)
    bsumsqs = np.abs(bsums) + buckets * 0.3

    return [
        ("distance scan (365x35)", (window, x),
         _kernels._sq_distances_np, "_sq_distances_nb"),
        ("split gains (35 feats, 10 bins)", (counts, sums, sumsqs),
         _kernels._split_gains_np, "_split_gains_nb"),
        ("adwin cut (48 buckets)", (buckets, bsums, bsumsqs, 0.002),
         _kernels._adwin_cut_np, "_adwin_cut_nb"),
    ]


def main():
    parser = argparse.ArgumentParser(
        description="compare numba and numpy kernel throughput")
    parser.add_argument("--repeat", type=int, default=20000,
                        help="calls per measurement (default 20000)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    print(f"numba active: {_kernels.NUMBA_ACTIVE}")
    header = f"{'kernel':34s} {'numpy':>12s} {'numba':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, call_args, np_fn, nb_name in make_cases(rng):
        t_np = time_call(np_fn, call_args, args.repeat)
        line = f"{name:34s} {t_np * 1e6:10.2f}us"
        nb_fn = getattr(_kernels, nb_name, None)
        if _kernels.NUMBA_ACTIVE and nb_fn is not None:
            t_nb = time_call(nb_fn, call_args, args.repeat)
            line += f" {t_nb * 1e6:10.2f}us {t_np / t_nb:8.1f}x"
        else:
            line += f" {'n/a':>12s} {'n/a':>9s}"
        print(line)


if __name__ == "__main__":
    main()
