#!/usr/bin/env python3
"""Benchmark the numba-compiled kernels against their pure-numpy fallbacks.

Run:
    python benchmarks/bench_kernels.py
    CRASHSYNTH_NO_NUMBA=1 python benchmarks/bench_kernels.py   # numpy-only

The same inputs go through both paths; outputs are checked for equality
before timing, so the table doubles as a parity smoke test.
"""

import time

import numpy as np

from crashsynth import kernels


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    impls = kernels.implementations()
    families = list(impls)
    print(f"kernel paths available: {', '.join(families)}")

    # representative hot-path workloads
    depth = rng.uniform(0.5, 150.0, (375, 1242))
    mask = rng.random((375, 1242)) > 0.6
    bp_args = (depth, mask, 721.5, 721.5, 621.0, 187.5, 120.0)

    boxes_a = rng.uniform(0, 1000, (60, 4))
    boxes_a[:, 2:] = boxes_a[:, :2] + rng.uniform(5, 120, (60, 2))
    boxes_b = rng.uniform(0, 1000, (80, 4))
    boxes_b[:, 2:] = boxes_b[:, :2] + rng.uniform(5, 120, (80, 2))

    cost = rng.uniform(0, 1, (40, 40))
    lane_pts = rng.uniform(0, 1242, (3000, 2))
    hd_a = rng.uniform(0, 1242, (1500, 2))
    hd_b = rng.uniform(0, 1242, (1500, 2))

    workloads = {
        "backproject_masked": bp_args,
        "iou_matrix": (boxes_a, boxes_b),
        "lexmin_assignment": (cost,),
        "dbscan_labels": (lane_pts, 15.0, 20),
        "directed_hausdorff": (hd_a, hd_b),
    }

    header = f"{'kernel':<22}" + "".join(f"{fam:>12}" for fam in families)
    if len(families) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, args in workloads.items():
        results = {}
        times = {}
        for fam in families:
            fn = impls[fam][name]
            results[fam] = fn(*args)  # warms the jit before timing
            times[fam] = timeit(fn, *args)
        if len(families) == 2:
            a, b = (np.asarray(results[f]) for f in families)
            assert np.array_equal(a, b), f"{name}: paths disagree"
        row = f"{name:<22}" + "".join(f"{times[fam] * 1e3:>10.2f}ms" for fam in families)
        if len(families) == 2:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
