"""Compiled kernels agree with their pure-Python bodies."""
from __future__ import annotations

import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from proexplore import _jit
from proexplore._jit import py_func
from proexplore.control import CONE, DISC, region_clearance
from proexplore.costmap import _DC, _DR, dijkstra_lattice
from proexplore.frontier import label_components
from proexplore.occupancy import _integrate_beams
from proexplore.raster import edt_squared
from proexplore.viewpoint import viewpoint_flags, visible_flags
from proexplore.world import _cast_beams

pytestmark = pytest.mark.skipif(not _jit.USE_NUMBA, reason="numba disabled")

RNG = np.random.default_rng(11)


def masks(n=15, density=0.3):
    for _ in range(n):
        h, w = RNG.integers(3, 25, size=2)
        yield RNG.random((h, w)) < density


def test_edt_parity():
    for m in masks():
        assert np.array_equal(edt_squared(m), py_func(edt_squared)(m))


def test_label_parity():
    for m in masks(density=0.5):
        a, na = label_components(m)
        b, nb = py_func(label_components)(m)
        assert na == nb and np.array_equal(a, b)


def test_dijkstra_parity():
    for m in masks(density=0.8):
        visit = np.where(m, RNG.uniform(0.1, 3.0, size=m.shape), np.inf)
        idx = np.argwhere(m)
        if not len(idx):
            continue
        sr, sc = (int(v) for v in idx[0])
        a = dijkstra_lattice(visit, sr, sc, 0.1, _DR, _DC)
        b = py_func(dijkstra_lattice)(visit, sr, sc, 0.1, _DR, _DC)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)


def test_beam_parity():
    occ = np.zeros((40, 40), dtype=bool)
    occ[0, :] = occ[-1, :] = occ[:, 0] = occ[:, -1] = True
    occ[RNG.random((40, 40)) < 0.05] = True
    bearings = 2 * math.pi * np.arange(90) / 90
    out = []
    for fn in (_cast_beams, py_func(_cast_beams)):
        ranges, hits = np.empty(90), np.empty(90, dtype=bool)
        fn(occ, 20.5, 20.5, bearings, 15.0, ranges, hits)
        out.append((ranges, hits))
    # libm differences between compiled and interpreted code stay in the last bits
    np.testing.assert_allclose(out[0][0], out[1][0], rtol=0, atol=1e-12)
    assert np.array_equal(out[0][1], out[1][1])
    ranges, hits = out[0]
    logs = []
    for fn in (_integrate_beams, py_func(_integrate_beams)):
        lo = np.zeros((40, 40))
        fn(lo, 20.5, 20.5, bearings, ranges, hits, -0.85, 2.2, math.log(99))
        logs.append(lo)
    assert np.array_equal(logs[0], logs[1])


def test_visibility_parity():
    free = RNG.random((30, 30)) > 0.1
    fr, fc = np.nonzero(RNG.random((30, 30)) < 0.05)
    args = (free, fr.astype(np.int64), fc.astype(np.int64), 15.5, 14.5, 2.0, 9.0)
    assert np.array_equal(visible_flags(*args), py_func(visible_flags)(*args))
    cr, cc = np.nonzero(free)
    args = (free, fr[:5].astype(np.int64), fc[:5].astype(np.int64), cr.astype(np.int64),
            cc.astype(np.int64), 2.0, 9.0)
    assert np.array_equal(viewpoint_flags(*args), py_func(viewpoint_flags)(*args))


def test_region_clearance_parity():
    cd = RNG.uniform(0, 6, size=(40, 40))
    cd[RNG.random((40, 40)) < 0.05] = 0.0
    for _ in range(40):
        a = RNG.uniform(5, 35, size=2)
        c = a + RNG.uniform(-6, 6, size=2)
        kind = int(RNG.choice([CONE, DISC]))
        args = (cd, kind, a[0], a[1], c[0], c[1], float(RNG.uniform(0, 4)))
        assert region_clearance(*args) == py_func(region_clearance)(*args)


RUN = """
import json, sys
from proexplore import _jit
from proexplore.explorer import ExplorationConfig, run
from proexplore.world import read_world
from proexplore.experiment import _world_path
rec = run(read_world(_world_path("demo", None)), ExplorationConfig(step_budget=40), (1.05, 1.05, 0.0))
json.dump({"numba": _jit.USE_NUMBA,
           "rows": [[t.tick, t.x, t.y, t.theta, t.s, t.mapping_pct] for t in rec.ticks]}, sys.stdout)
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("PROEXPLORE_DISABLE_NUMBA", None)
    if disable:
        env["PROEXPLORE_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", RUN], env=env, capture_output=True, text=True,
                         check=True, timeout=600)
    return json.loads(out.stdout)


@pytest.mark.slow
def test_disable_flag_gives_same_run():
    py = _run(True)
    jit = _run(False)
    assert py["numba"] is False and jit["numba"] is True
    assert len(py["rows"]) == len(jit["rows"]) == 41
    np.testing.assert_allclose(np.array(py["rows"]), np.array(jit["rows"]), rtol=0, atol=1e-9)
