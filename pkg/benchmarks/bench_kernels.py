"""Time the compiled kernels against the NumPy fallback on representative inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one row per kernel with the best-of-N wall time of each backend and
the speedup. The workloads match what the estimators and the reflected
chain hand to the kernels in one call.
"""

import argparse
import timeit

import numpy as np

from pathbv import _pykernels, kernels
from pathbv.gauss_path import TimeGrid

try:
    from pathbv import _ckernels
except ImportError:
    _ckernels = None


def workloads():
    g = np.random.default_rng(0)
    grid = TimeGrid.uniform(9)
    z = g.standard_normal((2048, grid.n_steps - 1, 2))
    a = np.zeros(2)

    q = np.abs(g.normal(0.3, 0.2, (2048, grid.n_steps + 1)))
    win = np.zeros(grid.n_steps, np.int64)
    levels = np.array([0.0, 0.02, 0.04, 0.08])

    m = 15
    t = np.arange(1, m + 1) / (m + 1)
    C = np.minimum.outer(t, t) - np.outer(t, t)
    G = C / np.diag(C)[None, :]
    inc = g.normal(0, 0.02, (20_000, m, 1))
    mean = np.full((m, 1), 0.5)
    box = np.array([0.0, 1.0])

    normals = g.standard_normal((4096, 256))
    thresh = g.standard_exponential(4096)
    choose = g.random(4096)

    def strip(mod):
        n = len(thresh)
        mod.strip_exit_chunk(np.full(n, 0.4), np.zeros(n), np.zeros(n), thresh, choose,
                             np.zeros(n, np.int64), np.full(n, np.nan), 1.0, 0.5, 1e-3, normals)

    return {
        "bridge_paths 2048x512x2": lambda mod: mod.bridge_paths(a, a, grid.times, z),
        "window_hazard 2048x512, 4 levels":
            lambda mod: mod.window_hazard(q, grid.dt, win, 1, levels),
        "reflect_chunk m=15, 2e4 steps, euclidean":
            lambda mod: mod.reflect_chunk(mean, mean, inc, 1e-3, kernels.PROJ_BOX, box,
                                          None, None, 1000, 1e-13),
        "reflect_chunk m=15, 2e4 steps, conormal":
            lambda mod: mod.reflect_chunk(mean, mean, inc, 1e-3, kernels.PROJ_BOX, box,
                                          None, G, 1000, 1e-13),
        "strip_exit_chunk 4096x256": strip,
    }


def best(fn, mod, repeat):
    return min(timeit.repeat(lambda: fn(mod), number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
    print(f"{'kernel':44s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, fn in workloads().items():
        tp = best(fn, _pykernels, args.repeat)
        if _ckernels is None:
            print(f"{name:44s} {tp:11.4f} {'-':>11s} {'-':>8s}")
            continue
        tc = best(fn, _ckernels, args.repeat)
        print(f"{name:44s} {tp:11.4f} {tc:11.4f} {tp / tc:7.1f}x")


if __name__ == "__main__":
    main()
