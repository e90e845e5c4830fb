"""Safe-and-informative visit cost field and minimum-travel-cost lattice planning."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._jit import njit
from .errors import ConfigError
from .raster import cell_center, cell_centers, cell_of, distance_to


class NavKind(Enum):
    UNIFORM = "uniform"
    EUCLIDEAN = "euclidean"
    GEODESIC = "geodesic"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown navigation cost {value!r}") from None


@dataclass
class CostField:
    dist2unknown: np.ndarray
    dist2collision: np.ndarray
    visit_cost: np.ndarray  # inf outside the planning space
    alpha_max: float
    beta_max: float
    resolution: float
    planning_free: np.ndarray = field(repr=False)

    @property
    def height_cells(self):
        return self.visit_cost.shape[0]

    def cell_of(self, position):
        return cell_of(position[0], position[1], self.height_cells, self.resolution)

    def center(self, cell):
        return cell_center(cell[0], cell[1], self.height_cells, self.resolution)

    def traversable(self, cell) -> bool:
        r, c = cell
        h, w = self.visit_cost.shape
        return 0 <= r < h and 0 <= c < w and bool(self.planning_free[r, c])


def build_cost_field(grid, spaces, alpha_max: float, beta_max: float) -> CostField:
    """Distance-to-unknown over distance-to-collision, saturated at ``alpha_max``/``beta_max``."""
    if alpha_max <= 0 or beta_max <= 0:
        raise ConfigError("alpha_max and beta_max must be positive")
    res = grid.resolution
    d2u = np.minimum(alpha_max, distance_to(grid.unknown, res))
    d2c = np.minimum(beta_max, distance_to(~spaces.planning_free, res, outside_is_site=True))
    visit = np.full(d2u.shape, np.inf)
    ok = spaces.planning_free
    visit[ok] = d2u[ok] / d2c[ok]
    return CostField(d2u, d2c, visit, alpha_max, beta_max, res, spaces.planning_free)


_DR = np.array([-1, 1, 0, 0, -1, -1, 1, 1], dtype=np.int64)
_DC = np.array([0, 0, -1, 1, -1, 1, -1, 1], dtype=np.int64)


@njit
def _before(d1, h1, i1, d2, h2, i2):
    if d1 != d2:
        return d1 < d2
    if h1 != h2:
        return h1 < h2
    return i1 < i2


@njit
def _heap_push(hd, hh, hi, size, d, h, i):
    k = size
    hd[k] = d
    hh[k] = h
    hi[k] = i
    while k > 0:
        p = (k - 1) >> 1
        if _before(hd[k], hh[k], hi[k], hd[p], hh[p], hi[p]):
            hd[k], hd[p] = hd[p], hd[k]
            hh[k], hh[p] = hh[p], hh[k]
            hi[k], hi[p] = hi[p], hi[k]
            k = p
        else:
            break
    return size + 1


@njit
def _heap_pop(hd, hh, hi, size):
    size -= 1
    hd[0] = hd[size]
    hh[0] = hh[size]
    hi[0] = hi[size]
    k = 0
    while True:
        a = 2 * k + 1
        if a >= size:
            break
        b = a + 1
        m = a
        if b < size and _before(hd[b], hh[b], hi[b], hd[a], hh[a], hi[a]):
            m = b
        if _before(hd[m], hh[m], hi[m], hd[k], hh[k], hi[k]):
            hd[k], hd[m] = hd[m], hd[k]
            hh[k], hh[m] = hh[m], hh[k]
            hi[k], hi[m] = hi[m], hi[k]
            k = m
        else:
            break
    return size


@njit
def dijkstra_lattice(visit, sr, sc, res, dr, dc):
    """Single-source 8-connected Dijkstra with edge cost mean(c_i, c_j) * |x_i - x_j|.

    Ties are broken by (cost, hop count, predecessor index).  Cells with
    non-finite visit cost are not traversable.
    """
    h, w = visit.shape
    n = h * w
    dist = np.full(n, np.inf)
    hops = np.full(n, -1, np.int64)
    pred = np.full(n, -1, np.int64)
    done = np.zeros(n, np.bool_)
    cap = 8 * n + 8
    hd = np.empty(cap, np.float64)
    hh = np.empty(cap, np.int64)
    hi = np.empty(cap, np.int64)
    s = sr * w + sc
    dist[s] = 0.0
    hops[s] = 0
    size = _heap_push(hd, hh, hi, 0, 0.0, 0, s)
    diag = res * math.sqrt(2.0)
    while size > 0:
        d = hd[0]
        hcount = hh[0]
        i = hi[0]
        size = _heap_pop(hd, hh, hi, size)
        if done[i]:
            continue
        done[i] = True
        r = i // w
        c = i - r * w
        ci = visit[r, c]
        for k in range(8):
            rr = r + dr[k]
            cc = c + dc[k]
            if rr < 0 or rr >= h or cc < 0 or cc >= w:
                continue
            cj = visit[rr, cc]
            if not np.isfinite(cj):
                continue
            j = rr * w + cc
            if done[j]:
                continue
            step = res if k < 4 else diag
            nd = d + 0.5 * (ci + cj) * step
            nh = hcount + 1
            better = nd < dist[j]
            if not better and nd == dist[j]:
                better = nh < hops[j] or (nh == hops[j] and i < pred[j])
            if better:
                dist[j] = nd
                hops[j] = nh
                pred[j] = i
                size = _heap_push(hd, hh, hi, size, nd, nh, j)
    return dist.reshape(h, w), hops.reshape(h, w), pred


@dataclass
class PathPlan:
    """Piecewise-linear reference path parameterized by normalized arc length."""

    waypoints: np.ndarray
    cumulative_cost: np.ndarray
    cells: np.ndarray = None

    def __post_init__(self):
        self.waypoints = np.atleast_2d(np.asarray(self.waypoints, dtype=np.float64))
        self.cumulative_cost = np.asarray(self.cumulative_cost, dtype=np.float64)
        seg = np.hypot(*np.diff(self.waypoints, axis=0).T) if len(self.waypoints) > 1 else np.zeros(0)
        self._arc = np.concatenate(([0.0], np.cumsum(seg)))

    @classmethod
    def point(cls, position, cell=None):
        cells = None if cell is None else np.array([cell], dtype=np.int64)
        return cls(np.array([position], dtype=np.float64), np.zeros(1), cells)

    @property
    def total_length(self) -> float:
        return float(self._arc[-1])

    @property
    def total_cost(self) -> float:
        return float(self.cumulative_cost[-1])

    @property
    def start(self):
        return tuple(self.waypoints[0])

    @property
    def end(self):
        return tuple(self.waypoints[-1])

    def s_of(self, s: float):
        s = min(1.0, max(0.0, float(s)))
        total = self._arc[-1]
        if total == 0.0 or s >= 1.0:
            return tuple(self.waypoints[-1]) if s >= 1.0 else tuple(self.waypoints[0])
        target = s * total
        k = int(np.searchsorted(self._arc, target, side="right")) - 1
        k = min(max(k, 0), len(self._arc) - 2)
        span = self._arc[k + 1] - self._arc[k]
        u = 0.0 if span == 0.0 else (target - self._arc[k]) / span
        p = self.waypoints[k] + u * (self.waypoints[k + 1] - self.waypoints[k])
        return float(p[0]), float(p[1])

    def nearest_cell_at(self, s: float):
        """Lattice cell of the waypoint closest (in arc length) to ``s``."""
        if self.cells is None:
            raise ValueError("path carries no lattice cells")
        total = self._arc[-1]
        target = min(1.0, max(0.0, s)) * total
        k = int(np.argmin(np.abs(self._arc - target)))
        return int(self.cells[k][0]), int(self.cells[k][1])


class ShortestPathTree:
    """Costs and predecessors from one start cell over a cost field."""

    def __init__(self, field: CostField, start_cell):
        self.field = field
        self.start_cell = (int(start_cell[0]), int(start_cell[1]))
        if not field.traversable(self.start_cell):
            raise ValueError(f"start cell {self.start_cell} is outside the planning space")
        self.dist, self.hops, self._pred = dijkstra_lattice(
            field.visit_cost, self.start_cell[0], self.start_cell[1], field.resolution, _DR, _DC)

    @property
    def reachable(self) -> np.ndarray:
        return np.isfinite(self.dist)

    def cost_to(self, cell) -> float:
        r, c = cell
        h, w = self.dist.shape
        if not (0 <= r < h and 0 <= c < w):
            return math.inf
        return float(self.dist[r, c])

    def cells_to(self, cell):
        if not math.isfinite(self.cost_to(cell)):
            return None
        w = self.dist.shape[1]
        i = cell[0] * w + cell[1]
        out = []
        while i >= 0:
            out.append((i // w, i % w))
            i = self._pred[i]
        out.reverse()
        return np.array(out, dtype=np.int64)

    def path_to(self, cell):
        cells = self.cells_to(cell)
        if cells is None:
            return None
        pts = cell_centers(cells[:, 0], cells[:, 1], self.field.height_cells, self.field.resolution)
        return PathPlan(pts, self.dist[cells[:, 0], cells[:, 1]], cells)


def optimal_path(field: CostField, start, goal):
    """Minimum travel-cost lattice path between the cells holding ``start`` and ``goal``.

    Returns ``None`` when the goal is not reachable through the planning space.
    """
    s_cell, g_cell = field.cell_of(start), field.cell_of(goal)
    if not field.traversable(s_cell):
        raise ValueError("start is outside the planning space")
    if not field.traversable(g_cell):
        return None
    return ShortestPathTree(field, s_cell).path_to(g_cell)


def travel_cost(field: CostField, start, goal) -> float:
    s_cell, g_cell = field.cell_of(start), field.cell_of(goal)
    if not field.traversable(s_cell) or not field.traversable(g_cell):
        return math.inf
    return ShortestPathTree(field, s_cell).cost_to(g_cell)


def navigation_cost(field: CostField, start, goal, kind, tree: ShortestPathTree = None) -> float:
    kind = NavKind.parse(kind)
    if kind is NavKind.UNIFORM:
        return 1.0
    if kind is NavKind.EUCLIDEAN:
        return math.hypot(goal[0] - start[0], goal[1] - start[1])
    if tree is not None:
        return tree.cost_to(field.cell_of(goal))
    return travel_cost(field, start, goal)
