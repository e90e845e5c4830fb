"""Viewpoints, visible frontiers, actionable information and target-region selection.

Visibility uses a probe discretization of the tolerance disc around a
viewpoint: the center plus eight points on the circle of radius ``eta``.  A
frontier cell is visible from ``v`` when every probe sees it along a segment
that touches only FREE cells and is no longer than the sensing range, and the
cell lies inside ``disc(v, R - eta)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import njit
from .costmap import NavKind, ShortestPathTree, navigation_cost
from .errors import ConfigError
from .frontier import InfoKind, cluster_frontiers, detect_frontiers, info_measure
from .raster import cell_center, segment_clear, walk_buffers, world_to_grid


@dataclass(frozen=True)
class ViewpointQuery:
    visibility_tolerance: float
    sensing_range: float
    info_threshold: float = 0.0
    info_kind: InfoKind = InfoKind.VOLUME
    nav_kind: NavKind = NavKind.GEODESIC

    def __post_init__(self):
        if not 0.0 < self.visibility_tolerance < self.sensing_range:
            raise ConfigError("need 0 < visibility_tolerance < sensing_range")
        if self.info_threshold < 0:
            raise ConfigError("info_threshold must be non-negative")
        object.__setattr__(self, "info_kind", InfoKind.parse(self.info_kind))
        object.__setattr__(self, "nav_kind", NavKind.parse(self.nav_kind))

    @property
    def eta(self):
        return self.visibility_tolerance

    @property
    def mu(self):
        return self.info_threshold


@njit
def probe_offsets(eta):
    ox = np.zeros(9)
    oy = np.zeros(9)
    for k in range(8):
        a = k * (math.pi / 4.0)
        ox[k + 1] = eta * math.cos(a)
        oy[k + 1] = -eta * math.sin(a)
    return ox, oy


@njit
def _sees(free, fgx, fgy, vgx, vgy, eta, rng, ox, oy, rows, cols, tin):
    dx = fgx - vgx
    dy = fgy - vgy
    if math.sqrt(dx * dx + dy * dy) > rng - eta + 1e-9:
        return False
    for k in range(9):
        ux = vgx + ox[k]
        uy = vgy + oy[k]
        ex = fgx - ux
        ey = fgy - uy
        if math.sqrt(ex * ex + ey * ey) > rng + 1e-9:
            return False
        if not segment_clear(free, fgx, fgy, ux, uy, rows, cols, tin):
            return False
    return True


@njit
def visible_flags(free, fr, fc, vgx, vgy, eta, rng):
    """Per frontier cell: visible from grid point ``(vgx, vgy)``."""
    ox, oy = probe_offsets(eta)
    rows, cols, tin = walk_buffers(rng + 2.0)
    out = np.zeros(fr.shape[0], np.bool_)
    for k in range(fr.shape[0]):
        out[k] = _sees(free, fc[k] + 0.5, fr[k] + 0.5, vgx, vgy, eta, rng, ox, oy, rows, cols, tin)
    return out


@njit
def viewpoint_flags(free, reg_r, reg_c, cand_r, cand_c, eta, rng):
    """Per candidate cell: at least one region cell is visible from its center."""
    ox, oy = probe_offsets(eta)
    rows, cols, tin = walk_buffers(rng + 2.0)
    out = np.zeros(cand_r.shape[0], np.bool_)
    lim = rng - eta + 1e-9
    for k in range(cand_r.shape[0]):
        vgx = cand_c[k] + 0.5
        vgy = cand_r[k] + 0.5
        for j in range(reg_r.shape[0]):
            fgx = reg_c[j] + 0.5
            fgy = reg_r[j] + 0.5
            if abs(fgx - vgx) > lim or abs(fgy - vgy) > lim:
                continue
            if _sees(free, fgx, fgy, vgx, vgy, eta, rng, ox, oy, rows, cols, tin):
                out[k] = True
                break
    return out


def _window(shape, r0, r1, c0, c1, pad):
    h, w = shape
    return max(0, r0 - pad), min(h, r1 + pad + 1), max(0, c0 - pad), min(w, c1 + pad + 1)


def visible_frontiers(grid, frontier_cells, v, query: ViewpointQuery) -> np.ndarray:
    """Mask of frontier cells reliably visible from position ``v``."""
    res = grid.resolution
    frontier_cells = np.asarray(frontier_cells, dtype=np.bool_)
    out = np.zeros(grid.shape, dtype=np.bool_)
    vgx, vgy = world_to_grid(v[0], v[1], grid.height_cells, res)
    pad = int(math.ceil(query.sensing_range / res)) + 1
    r0, r1, c0, c1 = _window(grid.shape, int(vgy), int(vgy), int(vgx), int(vgx), pad)
    fr, fc = np.nonzero(frontier_cells[r0:r1, c0:c1])
    if fr.size == 0:
        return out
    fr = fr + r0
    fc = fc + c0
    flags = visible_flags(grid.free, fr, fc, vgx, vgy, query.eta / res, query.sensing_range / res)
    out[fr[flags], fc[flags]] = True
    return out


def viewpoint_set(grid, region, spaces, query: ViewpointQuery) -> np.ndarray:
    """Mask of planning-free cells from which some region cell is visible."""
    res = grid.resolution
    out = np.zeros(grid.shape, dtype=np.bool_)
    pad = int(math.ceil((query.sensing_range - query.eta) / res)) + 1
    r0, r1, c0, c1 = _window(grid.shape, *region.bbox, pad)
    cr, cc = np.nonzero(spaces.planning_free[r0:r1, c0:c1])
    if cr.size == 0:
        return out
    cr = cr + r0
    cc = cc + c0
    flags = viewpoint_flags(grid.free, region.rows, region.cols, cr, cc,
                            query.eta / res, query.sensing_range / res)
    out[cr[flags], cc[flags]] = True
    return out


def is_near(x, v, eta: float) -> bool:
    return math.hypot(x[0] - v[0], x[1] - v[1]) <= eta


@dataclass
class RegionScore:
    region: object
    viewpoint_cell: tuple  # None when no reachable viewpoint exists
    viewpoint: tuple
    actionable: float
    info: float
    nav_cost: float

    @property
    def utility(self) -> float:
        if self.nav_cost == 0.0:
            return math.inf if self.info > 0 else 0.0
        return self.info / self.nav_cost


class MapView:
    """Selection rules evaluated over one map snapshot, with per-snapshot caches."""

    def __init__(self, grid, spaces, field, query: ViewpointQuery, frontier=None,
                 regions=None, connectivity: int = 4):
        self.grid = grid
        self.spaces = spaces
        self.field = field
        self.query = query
        self.frontier = detect_frontiers(grid, connectivity) if frontier is None else frontier
        if regions is None:
            regions = cluster_frontiers(self.frontier, grid.resolution, grid.prob)
        self.regions = regions
        self._vsets = {}
        self._trees = {}

    def viewpoint_set(self, region) -> np.ndarray:
        if region.id not in self._vsets:
            self._vsets[region.id] = viewpoint_set(self.grid, region, self.spaces, self.query)
        return self._vsets[region.id]

    def tree(self, position, cell=None) -> ShortestPathTree:
        cell = self.start_cell(position) if cell is None else cell
        if cell not in self._trees:
            self._trees[cell] = ShortestPathTree(self.field, cell)
        return self._trees[cell]

    def start_cell(self, position):
        cell = self.field.cell_of(position)
        if not self.field.traversable(cell):
            raise ValueError(f"position {position} is outside the planning space")
        return cell

    def visible(self, v) -> np.ndarray:
        return visible_frontiers(self.grid, self.frontier, v, self.query)

    def visible_volume(self, v) -> float:
        return float(np.count_nonzero(self.visible(v))) * self.grid.resolution ** 2

    def select_viewpoint(self, region, robot, cell=None):
        """(cell, position) of the reachable viewpoint minimizing summed distance to the region."""
        cand = self.viewpoint_set(region) & self.tree(robot, cell).reachable
        vr, vc = np.nonzero(cand)
        if vr.size == 0:
            return None, None
        # lattice units; positions differ from meters by the constant factor res
        dr = vr[:, None].astype(np.float64) - region.rows[None, :]
        dc = vc[:, None].astype(np.float64) - region.cols[None, :]
        total = np.sqrt(dr * dr + dc * dc).sum(axis=1)
        # first minimum in row-major order; summation noise must not split exact ties
        lo = total.min()
        k = int(np.flatnonzero(total <= lo + 1e-9 * max(1.0, lo))[0])
        best = (int(vr[k]), int(vc[k]))
        return best, cell_center(best[0], best[1], self.grid.height_cells, self.grid.resolution)

    def score(self, region, robot, cell=None) -> RegionScore:
        vcell, v = self.select_viewpoint(region, robot, cell)
        info = info_measure(self.grid, region, self.query.info_kind)
        if vcell is None:
            return RegionScore(region, None, None, 0.0, info, math.inf)
        actionable = self.visible_volume(v)
        nav = navigation_cost(self.field, robot, v, self.query.nav_kind, self.tree(robot, cell))
        return RegionScore(region, vcell, v, actionable, info, nav)

    def scores(self, robot, cell=None) -> list:
        return [self.score(region, robot, cell) for region in self.regions]

    def is_complete(self, robot) -> bool:
        mu = self.query.info_threshold
        return all(s.actionable <= mu for s in self.scores(robot))

    def select_target(self, robot, cell=None):
        mu = self.query.info_threshold
        best = None
        for s in self.scores(robot, cell):
            if s.actionable <= mu:
                continue
            if best is None or s.utility > best.utility:
                best = s
        return best


def select_viewpoint(grid, region, spaces, field, robot, query: ViewpointQuery):
    _, v = MapView(grid, spaces, field, query, regions=[region]).select_viewpoint(region, robot)
    return v


def actionable_info(grid, region, spaces, field, robot, query: ViewpointQuery) -> float:
    view = MapView(grid, spaces, field, query, regions=[region])
    _, v = view.select_viewpoint(region, robot)
    return 0.0 if v is None else view.visible_volume(v)


def is_informative(grid, v, query: ViewpointQuery, frontier=None, connectivity: int = 4) -> bool:
    if frontier is None:
        frontier = detect_frontiers(grid, connectivity)
    vol = np.count_nonzero(visible_frontiers(grid, frontier, v, query)) * grid.resolution ** 2
    return vol > query.info_threshold


def is_complete(grid, robot, query: ViewpointQuery, spaces, field, connectivity: int = 4) -> bool:
    return MapView(grid, spaces, field, query, connectivity=connectivity).is_complete(robot)


def select_target_region(grid, regions, spaces, field, robot, query: ViewpointQuery):
    """(region id, viewpoint) maximizing information per navigation cost, or ``None``."""
    view = MapView(grid, spaces, field, query, regions=regions)
    best = view.select_target(robot)
    return None if best is None else (best.region.id, best.viewpoint)
