"""Benchmark the compiled core against the pure-NumPy fallback.

Times the two hot kernels (mirror-image density evaluation and the exact
set-partition DP) on a grid of problem sizes and prints the speedup.

    python benchmarks/bench_backends.py [--repeats 3]
"""

import argparse
import time

import numpy as np

from isde import _core_py
from isde.combinatorics import enumerate_subsets

try:
    from isde import _core
except ImportError:
    _core = None


def time_call(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kde(repeats):
    print(f"{'kernel sums':<34} {'python':>10} {'compiled':>10} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for m, q, p in ((500, 2000, 1), (1000, 2000, 2), (2000, 4000, 2), (500, 1000, 3)):
        samples = rng.uniform(0, 1, (m, p))
        points = rng.uniform(0, 1, (q, p))
        h = float(m) ** (-1.0 / (4.0 + p))
        label = f"mirror eval m={m} q={q} p={p}"
        t_py = time_call(lambda: _core_py.kde_eval(points, samples, h, 0, True, True), repeats)
        if _core is None:
            print(f"{label:<34} {t_py:>9.3f}s {'-':>10} {'-':>8}")
            continue
        t_c = time_call(lambda: _core.kde_eval(points, samples, h, 0, True, True), repeats)
        a = _core.kde_eval(points, samples, h, 0, True, True)
        b = _core_py.kde_eval(points, samples, h, 0, True, True)
        assert np.allclose(a, b, rtol=1e-12)
        print(f"{label:<34} {t_py:>9.3f}s {t_c:>9.3f}s {t_py / t_c:>7.1f}x")


def bench_dp(repeats):
    print(f"\n{'partition DP':<34} {'python':>10} {'compiled':>10} {'speedup':>8}")
    rng = np.random.default_rng(1)
    for d, k in ((12, 3), (14, 3), (16, 2)):
        masks, scores, offsets = [], [], [0]
        by_min = {}
        for subset in enumerate_subsets(d, k):
            low = (subset.mask & -subset.mask).bit_length() - 1
            by_min.setdefault(low, []).append(subset.mask)
        for f in range(d):
            group = by_min.get(f, [])
            masks.extend(group)
            scores.extend(rng.normal(size=len(group)))
            offsets.append(len(masks))
        args = (
            d,
            np.asarray(masks, dtype=np.int64),
            np.asarray(scores, dtype=np.float64),
            np.asarray(offsets, dtype=np.int64),
        )
        label = f"dp_solve d={d} k={k}"
        t_py = time_call(lambda: _core_py.dp_solve(*args), repeats)
        if _core is None:
            print(f"{label:<34} {t_py:>9.3f}s {'-':>10} {'-':>8}")
            continue
        t_c = time_call(lambda: _core.dp_solve(*args), repeats)
        assert np.array_equal(_core.dp_solve(*args)[1], _core_py.dp_solve(*args)[1])
        print(f"{label:<34} {t_py:>9.3f}s {t_c:>9.3f}s {t_py / t_c:>7.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()
    if _core is None:
        print("compiled core not built; showing pure-Python timings only\n")
    bench_kde(args.repeats)
    bench_dp(args.repeats)


if __name__ == "__main__":
    main()
