"""Time the compiled and pure-Python kernel backends on identical inputs.

Usage::

    python3 benchmarks/bench_kernels.py [--n 20000] [--repeat 3]

Prints one row per kernel with the best-of-``repeat`` wall time for each
backend and the speed-up. Without the compiled extension only the Python
column is filled.
"""
import argparse
import math
import time

import numpy as np

from matedcrt import kernels
from matedcrt.brownian import covariance_factor, disk_path_with_n
from matedcrt.crtmap import build_map, rotation_system_and_faces
from matedcrt.rng import stream


def best_time(fn, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cases(n):
    """``name -> callable(impl)`` with inputs built once, outside the timed region."""
    m = stream(0, "bench-m").standard_normal(n).cumsum()

    cmap = build_map(disk_path_with_n(math.sqrt(2.0), min(n, 20000), 1, max_attempts=10**9))
    phi = np.ascontiguousarray(rotation_system_and_faces(cmap).phi, dtype=np.int64)
    indptr, indices = cmap.walk_csr
    stop = np.zeros(cmap.n_vertices, dtype=np.uint8)
    stop[cmap.boundary_order] = 1
    u = stream(0, "bench-u").random(1 << 20)
    start = cmap.n_vertices // 2

    def walks(impl):
        cur = np.full(64, start, dtype=np.int64)
        steps = np.zeros(64, dtype=np.int64)
        w, pos = 0, 0
        while w < 64 and pos < u.size:
            w, pos = impl.walk_batch(indptr, indices, stop, 10**6, u, pos, cur, steps, w,
                                     np.empty(0, dtype=np.int64))

    A = covariance_factor(math.sqrt(2.0))
    k = 200
    y = np.linalg.solve(A, [1.0, 0.0])
    z = stream(0, "bench-z").standard_normal(1 << 20)

    def bridge(impl):
        ol, orr = np.empty(k + 1), np.empty(k + 1)
        impl.bridge_rejection(z, 0, k, 1.0 / k, A[0, 0], A[1, 0], A[1, 1], y[0], y[1],
                              1.0, 0.0, 1e-8 / math.sqrt(k), ol, orr, 10**6)

    g = stream(0, "bench-f")
    p = g.standard_normal((600, 2)).cumsum(axis=0)
    q = g.standard_normal((600, 2)).cumsum(axis=0)
    xy = g.standard_normal((n, 2)).cumsum(axis=0) * 0.01
    x, yy = np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1])

    return {
        f"visible_pairs (n={n})": lambda impl: impl.visible_pairs(m),
        f"trace_faces ({phi.size} darts)": lambda impl: impl.trace_faces(phi),
        "walk_batch (64 walks)": walks,
        f"bridge_rejection (n={k})": bridge,
        "discrete_frechet (600 x 600)": lambda impl: impl.discrete_frechet(p, q),
        f"simplify_indices (n={n})": lambda impl: impl.simplify_indices(x, yy, 0.05),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000, help="input size for the array kernels")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    impls = kernels.implementations()
    print(f"backends available: {', '.join(impls)}")
    print(f"{'kernel':34s} {'python [s]':>11s} {'compiled [s]':>13s} {'speed-up':>9s}")
    for name, fn in cases(args.n).items():
        tp = best_time(lambda: fn(impls["python"]), args.repeat)
        if "compiled" in impls:
            tc = best_time(lambda: fn(impls["compiled"]), args.repeat)
            print(f"{name:34s} {tp:11.4f} {tc:13.4f} {tp / tc:8.1f}x")
        else:
            print(f"{name:34s} {tp:11.4f} {'n/a':>13s} {'':>9s}")


if __name__ == "__main__":
    main()
