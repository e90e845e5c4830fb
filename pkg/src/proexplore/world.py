"""Hidden ground-truth environment and the simulated 360 degree range scanner."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._jit import njit
from .raster import cell_of, traverse, walk_buffers, world_to_grid

DEFAULT_SENSING_RANGE = 1.5
DEFAULT_BEAM_COUNT = 360
DEFAULT_SCAN_RATE = 10.0


class WorldFormatError(ValueError):
    """Malformed world file; the message names the offending line."""


class InvalidOriginError(ValueError):
    """A ray or scan was requested from inside an occupied (or off-map) cell."""


@dataclass(frozen=True)
class GroundTruthWorld:
    occupied: np.ndarray
    resolution: float
    sensing_range: float = DEFAULT_SENSING_RANGE
    beam_count: int = DEFAULT_BEAM_COUNT
    scan_rate: float = DEFAULT_SCAN_RATE

    def __post_init__(self):
        occ = np.ascontiguousarray(self.occupied, dtype=np.bool_)
        occ.setflags(write=False)
        object.__setattr__(self, "occupied", occ)
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.beam_count <= 0:
            raise ValueError("beam_count must be positive")

    @property
    def height_cells(self) -> int:
        return self.occupied.shape[0]

    @property
    def width_cells(self) -> int:
        return self.occupied.shape[1]

    @property
    def shape(self):
        return self.occupied.shape

    @property
    def free(self) -> np.ndarray:
        return ~self.occupied

    def cell_of(self, x: float, y: float):
        return cell_of(x, y, self.height_cells, self.resolution)

    def is_free(self, x: float, y: float) -> bool:
        r, c = self.cell_of(x, y)
        return 0 <= r < self.height_cells and 0 <= c < self.width_cells and not self.occupied[r, c]


@dataclass(frozen=True)
class RangeScan:
    origin: tuple
    bearings: np.ndarray
    ranges: np.ndarray
    hit_flags: np.ndarray
    lattice: tuple  # (height_cells, width_cells, resolution)

    @property
    def beam_count(self) -> int:
        return len(self.bearings)


def load_world(text: str, sensing_range: float = DEFAULT_SENSING_RANGE,
               beam_count: int = DEFAULT_BEAM_COUNT,
               scan_rate: float = DEFAULT_SCAN_RATE) -> GroundTruthWorld:
    """Parse the ASCII world format.

    Line 1 is ``resolution <meters>``; every following non-blank line is one
    raster row, ``#`` occupied and ``.`` free, top row first.
    """
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise WorldFormatError("line 1: empty world file")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "resolution":
        raise WorldFormatError("line 1: expected 'resolution <meters>'")
    try:
        resolution = float(header[1])
    except ValueError:
        raise WorldFormatError(f"line 1: bad resolution {header[1]!r}") from None
    if not resolution > 0 or not math.isfinite(resolution):
        raise WorldFormatError("line 1: resolution must be a positive number")

    rows = []
    width = None
    for lineno, raw in enumerate(lines[1:], start=2):
        row = raw.rstrip("\r\n").rstrip()
        if not row:
            raise WorldFormatError(f"line {lineno}: blank row")
        bad = set(row) - {"#", "."}
        if bad:
            raise WorldFormatError(f"line {lineno}: unexpected characters {sorted(bad)}")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise WorldFormatError(f"line {lineno}: ragged row ({len(row)} cells, expected {width})")
        rows.append([ch == "#" for ch in row])
    if not rows:
        raise WorldFormatError("line 2: no raster rows")
    occ = np.array(rows, dtype=np.bool_)
    height = occ.shape[0]
    for i in range(height):
        if i in (0, height - 1):
            if not occ[i].all():
                raise WorldFormatError(f"line {i + 2}: open border (boundary row must be all '#')")
        elif not (occ[i, 0] and occ[i, -1]):
            raise WorldFormatError(f"line {i + 2}: open border (first and last cell must be '#')")
    return GroundTruthWorld(occ, resolution, sensing_range, beam_count, scan_rate)


def read_world(path, **sensor) -> GroundTruthWorld:
    return load_world(Path(path).read_text(), **sensor)


@njit
def _cast_beams(occ, gx0, gy0, bearings, t_max, ranges, hits):
    nrows, ncols = occ.shape
    rows, cols, tin = walk_buffers(t_max)
    for b in range(bearings.shape[0]):
        dx = math.cos(bearings[b])
        dy = -math.sin(bearings[b])
        n = traverse(gx0, gy0, dx, dy, t_max, nrows, ncols, rows, cols, tin)
        ranges[b] = t_max
        hits[b] = False
        for k in range(n):
            if occ[rows[k], cols[k]]:
                ranges[b] = tin[k]
                hits[b] = True
                break


def _check_origin(world, origin):
    x, y = origin
    if not world.is_free(x, y):
        raise InvalidOriginError(f"origin ({x:.3f}, {y:.3f}) is not in a free cell")


def ray_cast(world: GroundTruthWorld, origin, bearing: float, max_range: float):
    """Range to the first occupied cell the beam touches, truncated at ``max_range``."""
    _check_origin(world, origin)
    gx, gy = world_to_grid(origin[0], origin[1], world.height_cells, world.resolution)
    ranges = np.empty(1)
    hits = np.empty(1, dtype=np.bool_)
    _cast_beams(world.occupied, gx, gy, np.array([bearing], dtype=np.float64),
                max_range / world.resolution, ranges, hits)
    return float(ranges[0] * world.resolution), bool(hits[0])


def scan_bearings(beam_count: int) -> np.ndarray:
    return 2.0 * math.pi * np.arange(beam_count) / beam_count


def simulate_scan(world: GroundTruthWorld, pose_position) -> RangeScan:
    """One noiseless 360 degree sweep of ``world.beam_count`` beams."""
    _check_origin(world, pose_position)
    x, y = float(pose_position[0]), float(pose_position[1])
    gx, gy = world_to_grid(x, y, world.height_cells, world.resolution)
    bearings = scan_bearings(world.beam_count)
    ranges = np.empty(world.beam_count)
    hits = np.empty(world.beam_count, dtype=np.bool_)
    _cast_beams(world.occupied, gx, gy, bearings, world.sensing_range / world.resolution, ranges, hits)
    return RangeScan((x, y), bearings, ranges * world.resolution, hits,
                     (world.height_cells, world.width_cells, world.resolution))
