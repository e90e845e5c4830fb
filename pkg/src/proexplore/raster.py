"""Lattice geometry shared by the sensor, the mapper and the visibility checks.

Two coordinate frames are used throughout:

* world frame, meters, ``x`` to the right and ``y`` up;
* grid frame, cell units, ``gx`` along columns and ``gy`` along rows (down).

Cell ``(row, col)`` covers ``[col, col + 1) x [row, row + 1)`` in the grid
frame, so row 0 is the top (max-y) row of the world.
"""
from __future__ import annotations

import math

import numpy as np

from ._jit import njit

_TIE = 1e-9
_BIG = 1e12


def world_to_grid(x, y, height_cells, resolution):
    return x / resolution, height_cells - y / resolution


def grid_to_world(gx, gy, height_cells, resolution):
    return gx * resolution, (height_cells - gy) * resolution


def cell_of(x, y, height_cells, resolution):
    """(row, col) of the cell containing world point ``(x, y)``."""
    gx, gy = world_to_grid(x, y, height_cells, resolution)
    return int(math.floor(gy)), int(math.floor(gx))


def cell_center(row, col, height_cells, resolution):
    return (col + 0.5) * resolution, (height_cells - row - 0.5) * resolution


def cell_centers(rows, cols, height_cells, resolution):
    rows = np.asarray(rows, dtype=np.float64)
    cols = np.asarray(cols, dtype=np.float64)
    return np.column_stack(((cols + 0.5) * resolution, (height_cells - rows - 0.5) * resolution))


@njit
def traverse(gx0, gy0, dx, dy, t_max, nrows, ncols, rows, cols, tin):
    """Supercover walk of the segment ``p0 + t*(dx, dy)``, ``0 <= t <= t_max``.

    Writes every in-bounds cell the closed segment touches, in order of entry
    parameter, into ``rows``/``cols``/``tin`` and returns the count.  When the
    segment crosses a lattice corner both side cells are emitted before the
    diagonal one.  The walk stops at the first cell (other than a corner side
    cell) that leaves the raster.
    """
    c = int(math.floor(gx0))
    r = int(math.floor(gy0))
    if r < 0 or r >= nrows or c < 0 or c >= ncols:
        return 0
    cap = rows.shape[0]
    rows[0] = r
    cols[0] = c
    tin[0] = 0.0
    n = 1
    inf = np.inf
    if dx > 0.0:
        sc = 1
        tmx = (c + 1 - gx0) / dx
        tdx = 1.0 / dx
    elif dx < 0.0:
        sc = -1
        tmx = (c - gx0) / dx
        tdx = -1.0 / dx
    else:
        sc = 0
        tmx = inf
        tdx = inf
    if dy > 0.0:
        sr = 1
        tmy = (r + 1 - gy0) / dy
        tdy = 1.0 / dy
    elif dy < 0.0:
        sr = -1
        tmy = (r - gy0) / dy
        tdy = -1.0 / dy
    else:
        sr = 0
        tmy = inf
        tdy = inf
    while n < cap - 3:
        if tmx < tmy - _TIE:
            t = tmx
            if t > t_max:
                break
            c += sc
            tmx += tdx
        elif tmy < tmx - _TIE:
            t = tmy
            if t > t_max:
                break
            r += sr
            tmy += tdy
        else:
            t = tmx if tmx < tmy else tmy
            if t > t_max or t == inf:
                break
            # corner crossing: both side cells are touched
            if 0 <= r < nrows and 0 <= c + sc < ncols:
                rows[n] = r
                cols[n] = c + sc
                tin[n] = t
                n += 1
            if 0 <= r + sr < nrows and 0 <= c < ncols:
                rows[n] = r + sr
                cols[n] = c
                tin[n] = t
                n += 1
            c += sc
            r += sr
            tmx += tdx
            tmy += tdy
        if r < 0 or r >= nrows or c < 0 or c >= ncols:
            break
        rows[n] = r
        cols[n] = c
        tin[n] = t
        n += 1
    return n


@njit
def walk_buffers(length):
    cap = 6 * (int(length) + 4)
    return (np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.float64))


@njit
def segment_clear(mask, gx0, gy0, gx1, gy1, rows, cols, tin):
    """True iff every cell touched by the closed segment is in bounds and set in ``mask``."""
    nrows, ncols = mask.shape
    ddx = gx1 - gx0
    ddy = gy1 - gy0
    length = math.sqrt(ddx * ddx + ddy * ddy)
    if length == 0.0:
        r = int(math.floor(gy0))
        c = int(math.floor(gx0))
        return 0 <= r < nrows and 0 <= c < ncols and mask[r, c]
    n = traverse(gx0, gy0, ddx / length, ddy / length, length, nrows, ncols, rows, cols, tin)
    if n == 0:
        return False
    for k in range(n):
        if not mask[rows[k], cols[k]]:
            return False
    # the walk stops early when it leaves the raster
    rl = int(math.floor(gy1))
    cl = int(math.floor(gx1))
    if rl < 0 or rl >= nrows or cl < 0 or cl >= ncols:
        return False
    return True


@njit
def _edt_1d(f, n, d, v, z):
    k = 0
    v[0] = 0
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(1, n):
        s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        while s <= z[k]:
            k -= 1
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
        k += 1
        v[k] = q
        z[k] = s
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d[q] = (q - v[k]) * (q - v[k]) + f[v[k]]


@njit
def edt_squared(sites):
    """Exact squared Euclidean distance (cell units) from each cell center to the nearest site."""
    nrows, ncols = sites.shape
    m = max(nrows, ncols)
    f = np.empty(m, np.float64)
    d = np.empty(m, np.float64)
    v = np.empty(m, np.int64)
    z = np.empty(m + 1, np.float64)
    out = np.empty((nrows, ncols), np.float64)
    for c in range(ncols):
        for r in range(nrows):
            f[r] = 0.0 if sites[r, c] else _BIG
        _edt_1d(f, nrows, d, v, z)
        for r in range(nrows):
            out[r, c] = d[r]
    for r in range(nrows):
        for c in range(ncols):
            f[c] = out[r, c]
        _edt_1d(f, ncols, d, v, z)
        for c in range(ncols):
            out[r, c] = d[c]
    for r in range(nrows):
        for c in range(ncols):
            if out[r, c] >= _BIG * 0.5:
                out[r, c] = np.inf
    return out


def distance_to(sites, resolution=1.0, outside_is_site=False):
    """Euclidean distance (meters) from every cell center to the nearest site cell center.

    With ``outside_is_site`` the cells just beyond the raster border count as
    sites too.  An empty site set yields ``inf`` everywhere.
    """
    sites = np.asarray(sites, dtype=np.bool_)
    if outside_is_site:
        padded = np.ones((sites.shape[0] + 2, sites.shape[1] + 2), dtype=np.bool_)
        padded[1:-1, 1:-1] = sites
        d2 = edt_squared(padded)[1:-1, 1:-1]
    else:
        d2 = edt_squared(sites)
    return np.sqrt(d2) * resolution
