"""Benchmark the compiled kernels against the pure-Python/numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Covers the two hot paths of the congestion operator: batched haversine (edge
validation, camera projection) and the IDW accumulation over samples x
targets (the per-window inner loop of the interpolation operator).
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from roadpulse._kernels import pure

try:
    from roadpulse._kernels import _core
except ImportError:
    _core = None


def time_call(fn, args, repeat: int, inner: int) -> float:
    """Best-of-repeat mean seconds per call."""
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / inner)
    return best


def bench_haversine(repeat: int):
    rng = np.random.default_rng(0)
    rows = []
    for n in (100, 10_000, 1_000_000):
        args = (rng.uniform(-80, 80, n), rng.uniform(-179, 179, n),
                rng.uniform(-80, 80, n), rng.uniform(-179, 179, n))
        inner = max(1, 200_000 // n)
        t_pure = time_call(pure.haversine_arrays, args, repeat, inner)
        row = {"case": f"haversine n={n}", "pure_s": t_pure}
        if _core is not None:
            row["compiled_s"] = time_call(_core.haversine_arrays, args, repeat, inner)
        rows.append(row)
    return rows


def bench_idw(repeat: int):
    rng = np.random.default_rng(1)
    rows = []
    # (samples, targets): windows are small-n; dense roads go wide.
    for n, m in ((8, 80), (50, 200), (200, 2000)):
        offsets = rng.uniform(0, 3000, n)
        speeds = rng.uniform(0, 30, n)
        targets = rng.uniform(0, 3000, m)
        for p in (2.0, 50.0):
            args = (offsets, speeds, targets, p)
            inner = max(1, 2000 // m)
            t_pure = time_call(pure.idw_estimates, args, repeat, inner)
            row = {"case": f"idw n={n} m={m} p={int(p)}", "pure_s": t_pure}
            if _core is not None:
                row["compiled_s"] = time_call(_core.idw_estimates, args, repeat, inner)
            rows.append(row)
    return rows


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if _core is None:
        print("compiled kernels not built; timing the fallback only "
              "(run `pip install -e . --no-build-isolation` to build them)")

    rows = bench_haversine(args.repeat) + bench_idw(args.repeat)
    width = max(len(r["case"]) for r in rows)
    header = f"{'case':<{width}}  {'pure':>12}  {'compiled':>12}  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for r in rows:
        pure_s = r["pure_s"]
        if "compiled_s" in r:
            comp_s = r["compiled_s"]
            print(f"{r['case']:<{width}}  {pure_s * 1e3:>10.3f}ms  "
                  f"{comp_s * 1e3:>10.3f}ms  {pure_s / comp_s:>7.1f}x")
        else:
            print(f"{r['case']:<{width}}  {pure_s * 1e3:>10.3f}ms  {'-':>12}  {'-':>8}")

    # Sanity: both backends agree on a spot check.
    if _core is not None:
        rng = np.random.default_rng(2)
        offs, spd = rng.uniform(0, 100, 7), rng.uniform(0, 30, 7)
        tgt = rng.uniform(0, 100, 11)
        a = pure.idw_estimates(offs, spd, tgt, 2.0)
        b = _core.idw_estimates(offs, spd, tgt, 2.0)
        close = statistics.fmean(abs(x - y) for x, y in zip(a, b))
        print(f"\nbackend agreement (mean abs diff): {close:.2e}")


if __name__ == "__main__":
    main()
