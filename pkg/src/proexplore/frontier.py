"""Frontier detection, connected-component clustering and region information measures."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._jit import njit
from .errors import ConfigError
from .occupancy import FREE, UNKNOWN


class InfoKind(Enum):
    UNIFORM = "uniform"
    VOLUME = "volume"
    ENTROPY = "entropy"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown information measure {value!r}") from None


_OFFSETS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))
_OFFSETS_8 = _OFFSETS_4 + ((-1, -1), (-1, 1), (1, -1), (1, 1))


def _shifted(mask, dr, dc):
    """mask value of the (dr, dc) neighbour; False beyond the border."""
    out = np.zeros_like(mask)
    h, w = mask.shape
    out[max(0, -dr):h - max(0, dr), max(0, -dc):w - max(0, dc)] = \
        mask[max(0, dr):h - max(0, -dr), max(0, dc):w - max(0, -dc)]
    return out


def detect_frontiers(grid, connectivity: int = 4) -> np.ndarray:
    """Boolean mask of FREE cells with at least one UNKNOWN neighbour.

    ``connectivity`` selects edge neighbours (4) or edge+corner neighbours (8).
    """
    if connectivity not in (4, 8):
        raise ConfigError("connectivity must be 4 or 8")
    state = grid.state if hasattr(grid, "state") else np.asarray(grid)
    unknown = state == UNKNOWN
    touch = np.zeros_like(unknown)
    for dr, dc in (_OFFSETS_4 if connectivity == 4 else _OFFSETS_8):
        touch |= _shifted(unknown, dr, dc)
    return (state == FREE) & touch


@njit
def label_components(mask):
    """8-connected component labels (1..n, 0 = background) in row-major discovery order."""
    h, w = mask.shape
    labels = np.zeros((h, w), np.int64)
    stack = np.empty(h * w, np.int64)
    n = 0
    for r0 in range(h):
        for c0 in range(w):
            if not mask[r0, c0] or labels[r0, c0] != 0:
                continue
            n += 1
            labels[r0, c0] = n
            top = 0
            stack[0] = r0 * w + c0
            top = 1
            while top > 0:
                top -= 1
                idx = stack[top]
                r = idx // w
                c = idx - r * w
                for dr in range(-1, 2):
                    rr = r + dr
                    if rr < 0 or rr >= h:
                        continue
                    for dc in range(-1, 2):
                        cc = c + dc
                        if cc < 0 or cc >= w:
                            continue
                        if mask[rr, cc] and labels[rr, cc] == 0:
                            labels[rr, cc] = n
                            stack[top] = rr * w + cc
                            top += 1
    return labels, n


@dataclass
class FrontierRegion:
    id: int
    rows: np.ndarray
    cols: np.ndarray
    resolution: float = 1.0
    entropy: float = field(default=float("nan"))

    def __post_init__(self):
        order = np.lexsort((self.cols, self.rows))
        self.rows = np.asarray(self.rows, dtype=np.int64)[order]
        self.cols = np.asarray(self.cols, dtype=np.int64)[order]

    def __len__(self):
        return len(self.rows)

    @property
    def cells(self):
        return set(zip(self.rows.tolist(), self.cols.tolist()))

    @property
    def volume(self) -> float:
        return len(self.rows) * self.resolution ** 2

    @property
    def bbox(self):
        return int(self.rows.min()), int(self.rows.max()), int(self.cols.min()), int(self.cols.max())


def cluster_frontiers(cells, resolution: float = 1.0, prob=None) -> list:
    """Split a frontier mask into disjoint 8-connected regions.

    Regions are numbered by their first cell in row-major order.  If ``prob``
    is given, each region's entropy is filled in.
    """
    mask = np.asarray(cells, dtype=np.bool_)
    labels, n = label_components(mask)
    if n == 0:
        return []
    flat = labels.ravel()
    idx = np.flatnonzero(flat)
    lab = flat[idx]
    order = np.argsort(lab, kind="stable")
    idx, lab = idx[order], lab[order]
    bounds = np.searchsorted(lab, np.arange(1, n + 2))
    w = mask.shape[1]
    regions = []
    for k in range(n):
        part = idx[bounds[k]:bounds[k + 1]]
        reg = FrontierRegion(k, part // w, part % w, resolution)
        if prob is not None:
            reg.entropy = _entropy_sum(prob[reg.rows, reg.cols]) * resolution ** 2
        regions.append(reg)
    return regions


def _entropy_sum(p):
    p = np.asarray(p, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(p > 0.0, -p * np.log(p), 0.0)
        b = np.where(p < 1.0, -(1.0 - p) * np.log1p(-p), 0.0)
    return float(np.sum(a + b))


def region_entropy(grid, region: FrontierRegion) -> float:
    """Binary occupancy entropy summed over the region, in nats times cell area."""
    return _entropy_sum(grid.prob[region.rows, region.cols]) * grid.resolution ** 2


def info_measure(grid, region: FrontierRegion, kind) -> float:
    kind = InfoKind.parse(kind)
    if kind is InfoKind.UNIFORM:
        return 1.0
    if kind is InfoKind.VOLUME:
        return len(region) * grid.resolution ** 2
    return region_entropy(grid, region)
