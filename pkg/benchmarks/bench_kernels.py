"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--n 65536] [--r 2.0] [--repeat 3]

Each kernel is called with identical inputs under both backends and the
best of ``--repeat`` wall times is reported, with the speed-up. Outputs are
checked for equality before timing is trusted.
"""

import argparse
import time

import numpy as np

from geomix import kernels
from geomix.geometry import RggConfig, _grid_shape, build_rgg, sample_ppp
from geomix.structure import connected_components, extract_giant


def best_of(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n, r, seed):
    pts = sample_ppp(RggConfig(n, 2, r, seed))
    g = build_rgg(pts, r)
    giant = extract_giant(g, connected_components(g))
    u, v = g.edges()
    side = pts.side
    grid = _grid_shape(pts.count, side, r, 2)
    pos = np.ascontiguousarray(pts.positions)
    rng = np.random.default_rng(seed)
    walkers = 20000
    counts = rng.poisson(50.0, size=walkers)
    uniforms = rng.random(int(counts.sum()))
    target = giant.n_vertices // 2
    grow_u = rng.random(target)
    start = np.zeros(walkers, dtype=np.int64)

    def walk(impl):
        where = start.copy()
        impl.walk_steps(giant.indptr, giant.indices, where, counts, uniforms)
        return where

    return {
        "radius_pairs": lambda m: m.radius_pairs(pos, -side / 2.0, side / grid, grid, r * r),
        "min_labels": lambda m: m.min_labels(g.n_vertices, u, v),
        "walk_steps (20k walkers x 50 jumps)": walk,
        "grow_set (half the giant)": lambda m: m.grow_set(giant.indptr, giant.indices, 0,
                                                          target, grow_u),
        "bfs_distances": lambda m: m.bfs_distances(giant.indptr, giant.indices, 0),
    }


def _same(a, b):
    if isinstance(a, tuple):
        # edge lists may come out in different orders
        key = lambda e: np.lexsort(e[::-1])  # noqa: E731
        return all(np.array_equal(x[key(a)], y[key(b)]) for x, y in zip(a, b))
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=float, default=65536.0)
    p.add_argument("--r", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    impls = kernels.backends()
    if "cython" not in impls:
        print("compiled backend not built; only the fallback is timed")
    print(f"n={args.n:g} r={args.r:g} backends={sorted(impls)}")
    print(f"{'kernel':40s} {'python [s]':>11s} {'cython [s]':>11s} {'speed-up':>9s}")
    for name, fn in cases(args.n, args.r, args.seed).items():
        t_py, out_py = best_of(lambda: fn(impls["python"]), args.repeat)
        if "cython" in impls:
            t_c, out_c = best_of(lambda: fn(impls["cython"]), args.repeat)
            flag = "" if _same(out_py, out_c) else "  OUTPUTS DIFFER"
            print(f"{name:40s} {t_py:11.4f} {t_c:11.4f} {t_py / t_c:8.1f}x{flag}")
        else:
            print(f"{name:40s} {t_py:11.4f} {'-':>11s} {'-':>9s}")


if __name__ == "__main__":
    main()
