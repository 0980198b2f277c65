"""Benchmark the compiled z-buffer kernel against the numpy fallback.

Generates driving-scale synthetic inputs (millions of points scattered
into a 1248x832 raster), checks both implementations produce identical
buffers, and prints a timing table.

Run: python benchmarks/bench_render.py [--points N] [--repeats K]
"""

import argparse
import time

import numpy as np

from pseudoview.kernels import HAVE_COMPILED, fallback

if HAVE_COMPILED:
    from pseudoview.kernels import _zbuffer as compiled


def make_inputs(n_points: int, height: int, width: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return (
        rng.integers(0, width, n_points).astype(np.int64),
        rng.integers(0, height, n_points).astype(np.int64),
        rng.uniform(0.5, 120.0, n_points).astype(np.float32),
        rng.integers(0, 256, (n_points, 3), dtype=np.uint8),
        rng.integers(0, 5, n_points).astype(np.int32),
    )


def bench(fn, args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--points", type=int, default=2_000_000)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--height", type=int, default=832)
    parser.add_argument("--width", type=int, default=1248)
    opts = parser.parse_args()

    px, py, depth, colors, sf = make_inputs(opts.points, opts.height, opts.width)
    print(f"{opts.points:,} points into a {opts.width}x{opts.height} raster "
          f"(best of {opts.repeats})\n")
    print(f"{'radius':>6} {'numpy (s)':>12} {'compiled (s)':>14} {'speedup':>9}")

    for radius in (0, 1, 2):
        args = (px, py, depth, colors, sf, radius, opts.height, opts.width)
        t_np = bench(fallback.zbuffer_scatter, args, opts.repeats)
        if not HAVE_COMPILED:
            print(f"{radius:>6} {t_np:>12.3f} {'(not built)':>14} {'-':>9}")
            continue
        t_cy = bench(compiled.zbuffer_scatter, args, opts.repeats)
        a = fallback.zbuffer_scatter(*args)
        b = compiled.zbuffer_scatter(*args)
        for x, y in zip(a, b):
            if not np.array_equal(x, y):
                raise AssertionError("kernel outputs diverged")
        print(f"{radius:>6} {t_np:>12.3f} {t_cy:>14.3f} {t_np / t_cy:>8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
