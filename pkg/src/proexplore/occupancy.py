"""Log-odds occupancy belief with a latched free/occupied/unknown classification."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from ._jit import njit
from .raster import edt_squared, traverse, walk_buffers, world_to_grid

L_FREE = -0.85
L_OCC = 2.2
L_CLAMP = math.log(99.0)  # prob in [0.01, 0.99]
P_FREE = 0.2
P_OCC = 0.8


class CellState(IntEnum):
    UNKNOWN = 0
    FREE = 1
    OCCUPIED = 2


UNKNOWN, FREE, OCCUPIED = CellState.UNKNOWN, CellState.FREE, CellState.OCCUPIED


class LatticeMismatchError(ValueError):
    pass


def logit(p):
    return math.log(p / (1.0 - p))


class OccupancyGrid:
    """Robot belief over the world lattice.

    ``state`` latches: once a cell is classified FREE or OCCUPIED it keeps that
    label, so known space only grows and unknown space only shrinks.
    """

    def __init__(self, height_cells, width_cells, resolution, p_free=P_FREE, p_occ=P_OCC,
                 l_free=L_FREE, l_occ=L_OCC, clamp=L_CLAMP):
        if not 0.0 <= p_free < p_occ <= 1.0:
            raise ValueError(f"need 0 <= p_free < p_occ <= 1, got {p_free}, {p_occ}")
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        self.height_cells = int(height_cells)
        self.width_cells = int(width_cells)
        self.resolution = float(resolution)
        self.p_free = float(p_free)
        self.p_occ = float(p_occ)
        self.l_free = float(l_free)
        self.l_occ = float(l_occ)
        self.clamp = float(clamp)
        self.logodds = np.zeros((self.height_cells, self.width_cells))
        self.state = np.zeros((self.height_cells, self.width_cells), dtype=np.int8)
        self.version = 0
        self.refresh_state()

    @classmethod
    def for_world(cls, world, **params):
        return cls(world.height_cells, world.width_cells, world.resolution, **params)

    @classmethod
    def from_states(cls, states, resolution=1.0, **params):
        """Grid whose latched classification equals ``states`` (test/fixture helper)."""
        states = np.asarray(states, dtype=np.int8)
        grid = cls(states.shape[0], states.shape[1], resolution, **params)
        lo = np.zeros(states.shape)
        lo[states == FREE] = -grid.clamp
        lo[states == OCCUPIED] = grid.clamp
        grid.logodds = lo
        grid.state = states.copy()
        return grid

    @property
    def shape(self):
        return self.state.shape

    @property
    def prob(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.logodds))

    @property
    def free(self) -> np.ndarray:
        return self.state == FREE

    @property
    def occupied(self) -> np.ndarray:
        return self.state == OCCUPIED

    @property
    def unknown(self) -> np.ndarray:
        return self.state == UNKNOWN

    def set_prob(self, prob):
        """Overwrite probabilities (clamped) and re-derive unlatched states."""
        p = np.clip(np.asarray(prob, dtype=np.float64), 1e-12, 1.0 - 1e-12)
        self.logodds = np.clip(np.log(p / (1.0 - p)), -self.clamp, self.clamp)
        self.refresh_state()

    def refresh_state(self):
        prob = self.prob
        open_ = self.state == UNKNOWN
        self.state[open_ & (prob <= self.p_free)] = FREE
        self.state[open_ & (prob >= self.p_occ)] = OCCUPIED
        self.version += 1

    def copy(self) -> "OccupancyGrid":
        other = object.__new__(OccupancyGrid)
        other.__dict__.update(self.__dict__)
        other.logodds = self.logodds.copy()
        other.state = self.state.copy()
        return other

    def cell_of(self, x, y):
        gx, gy = world_to_grid(x, y, self.height_cells, self.resolution)
        return int(math.floor(gy)), int(math.floor(gx))

    def in_bounds(self, r, c) -> bool:
        return 0 <= r < self.height_cells and 0 <= c < self.width_cells


@njit
def _integrate_beams(logodds, gx0, gy0, bearings, ranges, hits, l_free, l_occ, clamp):
    nrows, ncols = logodds.shape
    t_cap = 0.0
    for b in range(ranges.shape[0]):
        if ranges[b] > t_cap:
            t_cap = ranges[b]
    rows, cols, tin = walk_buffers(t_cap + 1.0)
    for b in range(bearings.shape[0]):
        dx = math.cos(bearings[b])
        dy = -math.sin(bearings[b])
        t_end = ranges[b]
        n = traverse(gx0, gy0, dx, dy, t_end, nrows, ncols, rows, cols, tin)
        for k in range(n):
            if tin[k] < t_end - 1e-9:
                v = logodds[rows[k], cols[k]] + l_free
                logodds[rows[k], cols[k]] = v if v > -clamp else -clamp
        if hits[b]:
            hr = int(math.floor(gy0 + (t_end + 1e-6) * dy))
            hc = int(math.floor(gx0 + (t_end + 1e-6) * dx))
            if 0 <= hr < nrows and 0 <= hc < ncols:
                v = logodds[hr, hc] + l_occ
                logodds[hr, hc] = v if v < clamp else clamp


def integrate_scan(grid: OccupancyGrid, scan) -> OccupancyGrid:
    """Fold one range scan into ``grid`` in place and return it.

    Cells a beam passes through before its endpoint get free evidence; the cell
    just beyond a hit endpoint gets occupied evidence.  Beams without a hit give
    no occupied evidence.
    """
    h, w, res = scan.lattice
    if (h, w) != grid.shape or not math.isclose(res, grid.resolution):
        raise LatticeMismatchError(f"scan lattice {h}x{w}@{res} does not match grid "
                                   f"{grid.height_cells}x{grid.width_cells}@{grid.resolution}")
    gx, gy = world_to_grid(scan.origin[0], scan.origin[1], h, res)
    _integrate_beams(grid.logodds, gx, gy, np.asarray(scan.bearings, dtype=np.float64),
                     np.asarray(scan.ranges, dtype=np.float64) / res,
                     np.asarray(scan.hit_flags, dtype=np.bool_),
                     grid.l_free, grid.l_occ, grid.clamp)
    grid.refresh_state()
    return grid


def classify(grid: OccupancyGrid):
    """(free, occupied, unknown) boolean masks; disjoint and covering."""
    return grid.free, grid.occupied, grid.unknown


def erode(cells, radius, resolution=1.0):
    """Cells whose closed ``radius`` disc holds only set cell centers.

    Cell centers outside the raster count as unset.
    """
    cells = np.asarray(cells, dtype=np.bool_)
    if radius < 0:
        raise ValueError("radius must be non-negative")
    return cells & (_clearance_sq(cells) > (radius / resolution) ** 2 + 1e-9)


def _clearance_sq(cells):
    padded = np.zeros((cells.shape[0] + 2, cells.shape[1] + 2), dtype=np.bool_)
    padded[1:-1, 1:-1] = cells
    return edt_squared(~padded)[1:-1, 1:-1]


@dataclass
class SafeSpaces:
    planning_free: np.ndarray
    control_free: np.ndarray
    robot_radius: float
    clearance: float
    resolution: float
    # meters from each cell center to the nearest cell center outside control_free
    control_distance: np.ndarray


def safe_spaces(grid: OccupancyGrid, robot_radius: float, clearance: float) -> SafeSpaces:
    if robot_radius <= 0 or clearance <= 0:
        raise ValueError("robot_radius and clearance must be positive")
    free = grid.free
    d2 = _clearance_sq(free)
    res = grid.resolution
    planning = free & (d2 > ((robot_radius + clearance) / res) ** 2 + 1e-9)
    control = free & (d2 > (robot_radius / res) ** 2 + 1e-9)
    return SafeSpaces(planning, control, robot_radius, clearance, res,
                      np.sqrt(_clearance_sq(control)) * res)


def mapping_percentage(grid: OccupancyGrid) -> float:
    """Known fraction of the map, (|F| + |O|) / (|F| + |O| + |U|)."""
    return float(np.count_nonzero(grid.state != UNKNOWN)) / grid.state.size


def pgm_text(grid: OccupancyGrid) -> str:
    img = np.full(grid.shape, 128, dtype=np.int64)
    img[grid.free] = 255
    img[grid.occupied] = 0
    lines = ["P2", f"{grid.width_cells} {grid.height_cells}", "255"]
    lines.extend(" ".join(map(str, row)) for row in img)
    return "\n".join(lines) + "\n"


def write_pgm(path, grid: OccupancyGrid):
    Path(path).write_text(pgm_text(grid))
