"""Time the compiled kernels against their pure-Python bodies on the office map.

    python3 benchmarks/bench_kernels.py [--repeat N]

The pure-Python column is what ``PROEXPLORE_DISABLE_NUMBA=1`` runs.
"""
from __future__ import annotations

import argparse
import math
import time
from importlib import resources

import numpy as np

from proexplore import _jit
from proexplore._jit import py_func
from proexplore.control import CONE, region_clearance
from proexplore.costmap import _DC, _DR, dijkstra_lattice
from proexplore.frontier import label_components
from proexplore.raster import edt_squared, world_to_grid
from proexplore.viewpoint import visible_flags
from proexplore.world import _cast_beams, read_world


def cases():
    world = read_world(resources.files("proexplore") / "data" / "office.world")
    occ = world.occupied
    free = ~occ
    h, w = occ.shape
    rng = np.random.default_rng(0)
    gx, gy = world_to_grid(4.05, 8.45, h, world.resolution)
    bearings = 2 * math.pi * np.arange(world.beam_count) / world.beam_count
    ranges = np.empty(world.beam_count)
    hits = np.empty(world.beam_count, dtype=bool)
    visit = np.where(free, rng.uniform(0.5, 2.0, size=occ.shape), np.inf)
    sr, sc = (int(v) for v in np.argwhere(free)[len(np.argwhere(free)) // 2])
    fr, fc = np.nonzero(free & (rng.random(occ.shape) < 0.02))
    cd = np.where(free, rng.uniform(0.0, 8.0, size=occ.shape), 0.0)
    return [
        ("edt_squared", edt_squared, (occ,)),
        ("label_components", label_components, (free,)),
        ("dijkstra_lattice", dijkstra_lattice, (visit, sr, sc, 0.1, _DR, _DC)),
        ("cast_beams x360", _cast_beams, (occ, gx, gy, bearings, 15.0, ranges, hits)),
        ("visible_flags", visible_flags, (free, fr, fc, gx, gy, 2.0, 13.6)),
        ("region_clearance", region_clearance, (cd, CONE, gx, gy, gx + 8.0, gy + 3.0, 2.5)),
    ]


def best_of(fn, args, repeat):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if not _jit.USE_NUMBA:
        print("numba is disabled; both columns run the same Python code")
    print(f"{'kernel':20s} {'numba ms':>10s} {'python ms':>10s} {'speedup':>8s}")
    for name, kernel, kargs in cases():
        kernel(*kargs)  # compile outside the timed region
        fast = best_of(kernel, kargs, args.repeat)
        slow = best_of(py_func(kernel), kargs, 1)
        print(f"{name:20s} {1e3 * fast:10.3f} {1e3 * slow:10.1f} {slow / fast:8.0f}x")


if __name__ == "__main__":
    main()
