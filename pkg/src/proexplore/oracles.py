"""Brute-force reference implementations and randomized self-check suites.

Each oracle evaluates its definition directly (all-pairs distances,
Bellman-Ford relaxation, closed segment/square intersection) and shares no
code with the fast kernels it checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .costmap import CostField, ShortestPathTree
from .occupancy import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, erode
from .raster import distance_to

INF = math.inf


def brute_distance(sites, resolution=1.0, outside_is_site=False):
    """All-pairs distance from every cell center to the nearest site center."""
    sites = np.asarray(sites, dtype=bool)
    h, w = sites.shape
    pts = [(r, c) for r in range(h) for c in range(w) if sites[r, c]]
    if outside_is_site:
        pts += [(r, c) for r in range(-1, h + 1) for c in (-1, w)]
        pts += [(r, c) for r in (-1, h) for c in range(w)]
    out = np.full((h, w), INF)
    if not pts:
        return out
    p = np.array(pts, dtype=float)
    for r in range(h):
        for c in range(w):
            out[r, c] = math.sqrt(np.min((p[:, 0] - r) ** 2 + (p[:, 1] - c) ** 2)) * resolution
    return out


def brute_erode(cells, radius, resolution=1.0):
    """Keep a set cell iff no unset center (inside or outside the raster) lies within ``radius``."""
    cells = np.asarray(cells, dtype=bool)
    h, w = cells.shape
    k = int(math.ceil(radius / resolution)) + 1
    lim = (radius / resolution) ** 2
    out = np.zeros_like(cells)
    for r in range(h):
        for c in range(w):
            if not cells[r, c]:
                continue
            ok = True
            for dr in range(-k, k + 1):
                for dc in range(-k, k + 1):
                    if dr * dr + dc * dc > lim + 1e-9:
                        continue
                    rr, cc = r + dr, c + dc
                    if not (0 <= rr < h and 0 <= cc < w) or not cells[rr, cc]:
                        ok = False
            out[r, c] = ok
    return out


def bellman_ford(visit, start, resolution=1.0):
    """Minimum travel cost over the 8-connected lattice by repeated relaxation."""
    visit = np.asarray(visit, dtype=float)
    h, w = visit.shape
    dist = np.full((h, w), INF)
    dist[start] = 0.0
    moves = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]
    for _ in range(h * w):
        changed = False
        for r in range(h):
            for c in range(w):
                if not math.isfinite(dist[r, c]):
                    continue
                for dr, dc in moves:
                    rr, cc = r + dr, c + dc
                    if not (0 <= rr < h and 0 <= cc < w) or not math.isfinite(visit[rr, cc]):
                        continue
                    step = resolution * math.hypot(dr, dc)
                    nd = dist[r, c] + 0.5 * (visit[r, c] + visit[rr, cc]) * step
                    if nd < dist[rr, cc] - 1e-12:
                        dist[rr, cc] = nd
                        changed = True
        if not changed:
            break
    return dist


def segment_hits_square(p, q, row, col, eps=1e-9):
    """Closed segment ``p-q`` (grid frame) meets the closed square of cell ``(row, col)``."""
    t0, t1 = 0.0, 1.0
    for a, d, lo in ((p[0], q[0] - p[0], col), (p[1], q[1] - p[1], row)):
        lo, hi = lo - eps, lo + 1 + eps
        if d == 0.0:
            if a < lo or a > hi:
                return False
            continue
        ta, tb = (lo - a) / d, (hi - a) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 > t1:
            return False
    return True


def brute_segment_clear(free, p, q):
    h, w = free.shape
    if not (0 <= p[0] < w and 0 <= p[1] < h and 0 <= q[0] < w and 0 <= q[1] < h):
        return False
    c0, c1 = int(math.floor(min(p[0], q[0]))) - 1, int(math.floor(max(p[0], q[0]))) + 1
    r0, r1 = int(math.floor(min(p[1], q[1]))) - 1, int(math.floor(max(p[1], q[1]))) + 1
    for r in range(max(0, r0), min(h, r1 + 1)):
        for c in range(max(0, c0), min(w, c1 + 1)):
            if not free[r, c] and segment_hits_square(p, q, r, c):
                return False
    return True


def probe_points(v, eta):
    pts = [tuple(v)]
    for k in range(8):
        a = k * math.pi / 4
        pts.append((v[0] + eta * math.cos(a), v[1] + eta * math.sin(a)))
    return pts


def brute_visible(free, frontier, v, eta, rng):
    """Visible frontier mask from grid point ``v`` (grid units throughout)."""
    free = np.asarray(free, dtype=bool)
    out = np.zeros_like(free)
    probes = probe_points(v, eta)
    for r, c in zip(*np.nonzero(frontier)):
        f = (c + 0.5, r + 0.5)
        if math.dist(f, v) > rng - eta + 1e-9:
            continue
        out[r, c] = all(math.dist(f, u) <= rng + 1e-9 and brute_segment_clear(free, f, u)
                        for u in probes)
    return out


def brute_viewpoint_set(free, planning_free, region_cells, eta, rng):
    mask = np.zeros_like(np.asarray(free, dtype=bool))
    for r, c in region_cells:
        mask[r, c] = True
    out = np.zeros_like(mask)
    for r, c in zip(*np.nonzero(planning_free)):
        out[r, c] = brute_visible(free, mask, (c + 0.5, r + 0.5), eta, rng).any()
    return out


@dataclass
class SuiteReport:
    name: str
    passed: int = 0
    failed: int = 0
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.passed > 0

    def line(self) -> str:
        return f"{self.name}: {'PASS' if self.ok else 'FAIL'} ({self.passed} passed, {self.failed} failed)"


def _random_mask(rng, h, w, density):
    return rng.random((h, w)) < density


def suite_distance(trials=50, seed=0) -> SuiteReport:
    rep = SuiteReport("distance")
    rng = np.random.default_rng(seed)
    for i in range(trials):
        h, w = rng.integers(1, 21, size=2)
        sites = _random_mask(rng, h, w, rng.uniform(0.02, 0.4))
        res = float(rng.choice([0.05, 0.1, 1.0]))
        for outside in (False, True):
            fast = distance_to(sites, res, outside_is_site=outside)
            ref = brute_distance(sites, res, outside_is_site=outside)
            fin = np.isfinite(ref)
            err = np.abs(fast[fin] - ref[fin])
            if np.array_equal(np.isfinite(fast), fin) and np.max(err, initial=0.0) <= res / 2:
                rep.passed += 1
            else:
                rep.failed += 1
                rep.notes.append(f"trial {i} outside={outside}")
    return rep


def suite_erosion(trials=50, seed=0) -> SuiteReport:
    rep = SuiteReport("erosion")
    rng = np.random.default_rng(seed)
    for i in range(trials):
        h, w = rng.integers(1, 21, size=2)
        cells = _random_mask(rng, h, w, rng.uniform(0.5, 0.98))
        res = float(rng.choice([0.1, 0.25, 1.0]))
        radius = float(rng.choice([0.0, 1.0, 1.5, 2.0, 2.5, 3.0])) * res
        if np.array_equal(erode(cells, radius, res), brute_erode(cells, radius, res)):
            rep.passed += 1
        else:
            rep.failed += 1
            rep.notes.append(f"trial {i} radius={radius}")
    return rep


def suite_dijkstra(trials=50, seed=0) -> SuiteReport:
    rep = SuiteReport("dijkstra")
    rng = np.random.default_rng(seed)
    for i in range(trials):
        h, w = rng.integers(2, 21, size=2)
        ok = rng.random((h, w)) < 0.8
        visit = np.where(ok, rng.uniform(0.1, 5.0, size=(h, w)), INF)
        start = tuple(int(v) for v in np.argwhere(ok)[0]) if ok.any() else None
        if start is None:
            continue
        res = float(rng.choice([0.1, 1.0]))
        field_ = CostField(visit, visit, visit, 1.0, 1.0, res, ok)
        fast = ShortestPathTree(field_, start).dist
        ref = bellman_ford(visit, start, res)
        same_inf = np.array_equal(np.isinf(fast), np.isinf(ref))
        fin = np.isfinite(ref)
        if same_inf and np.allclose(fast[fin], ref[fin], rtol=1e-12, atol=1e-12):
            rep.passed += 1
        else:
            rep.failed += 1
            rep.notes.append(f"trial {i}")
    return rep


def suite_visibility(trials=50, seed=0) -> SuiteReport:
    from .frontier import FrontierRegion, detect_frontiers
    from .occupancy import SafeSpaces
    from .viewpoint import ViewpointQuery, viewpoint_set, visible_frontiers

    rep = SuiteReport("visibility")
    rng = np.random.default_rng(seed)
    for i in range(trials):
        h, w = rng.integers(6, 21, size=2)
        states = np.full((h, w), FREE, dtype=np.int8)
        states[rng.random((h, w)) < 0.12] = OCCUPIED
        r0, c0 = rng.integers(0, h), rng.integers(0, w)
        states[max(0, r0 - 3):r0 + 3, max(0, c0 - 4):c0 + 4] = UNKNOWN
        grid = OccupancyGrid.from_states(states, 1.0)
        frontier = detect_frontiers(grid)
        eta, R = 2.0, float(rng.uniform(4.0, 9.0))
        query = ViewpointQuery(eta, R)
        free_cells = np.argwhere(grid.free)
        if len(free_cells) == 0:
            continue
        r, c = free_cells[rng.integers(len(free_cells))]
        v = ((c + 0.5), h - (r + 0.5))
        fast = visible_frontiers(grid, frontier, v, query)
        ref = brute_visible(grid.free, frontier, (c + 0.5, r + 0.5), eta, R)
        good = np.array_equal(fast, ref)
        fr = np.argwhere(frontier)
        if len(fr):
            region = FrontierRegion(0, fr[:, 0], fr[:, 1])
            spaces = SafeSpaces(grid.free, grid.free, 0.1, 0.1, 1.0, np.zeros((h, w)))
            good &= np.array_equal(viewpoint_set(grid, region, spaces, query),
                                   brute_viewpoint_set(grid.free, grid.free, map(tuple, fr), eta, R))
        if good:
            rep.passed += 1
        else:
            rep.failed += 1
            rep.notes.append(f"trial {i}")
    return rep


SUITES = {
    "distance": suite_distance,
    "erosion": suite_erosion,
    "dijkstra": suite_dijkstra,
    "visibility": suite_visibility,
}


def run_suites(name="all", trials=50, seed=0):
    names = list(SUITES) if name == "all" else [name]
    for n in names:
        if n not in SUITES:
            raise KeyError(f"unknown oracle suite {n!r}; choose from {', '.join(SUITES)} or all")
    return [SUITES[n](trials, seed) for n in names]
