"""Unicycle path following with a feedback motion-prediction governor.

The reference point ``p(s)`` slides along the path at a rate throttled by how
far the predicted motion region stays from the unsafe (non control-free)
cells, so the robot never outruns its safe corridor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._jit import njit
from .errors import ConfigError, SafetyViolation
from .raster import cell_of, traverse, walk_buffers, world_to_grid

CONE = 0
DISC = 1


def wrap_angle(theta: float) -> float:
    """Map an angle into [-pi, pi)."""
    out = (theta + math.pi) % (2.0 * math.pi) - math.pi
    return -math.pi if out >= math.pi else out


@dataclass(frozen=True)
class UnicycleState:
    position: tuple
    heading: float = 0.0
    path_param: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        object.__setattr__(self, "heading", wrap_angle(float(self.heading)))


@dataclass(frozen=True)
class ControlParams:
    k_v: float = 1.0
    k_w: float = 2.0
    k_safety: float = 1.0
    k_s: float = 1.0
    v_max: float = 1.0
    w_max: float = 1.0
    dt: float = 0.1

    def __post_init__(self):
        for name in ("k_v", "k_w", "k_safety", "k_s", "v_max", "w_max", "dt"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class ControlOutput:
    v: float
    w: float
    s_rate: float
    dist_to_unsafe: float


def body_components(state: UnicycleState, target):
    """(forward, lateral) components of ``target - x`` in the robot frame."""
    dx = target[0] - state.position[0]
    dy = target[1] - state.position[1]
    c, s = math.cos(state.heading), math.sin(state.heading)
    return c * dx + s * dy, -s * dx + c * dy


@dataclass(frozen=True)
class PredictionRegion:
    """Convex hull of ``apex`` and ``disc(center, radius)``; a plain disc when ``kind == DISC``."""

    kind: int
    apex: tuple
    center: tuple
    radius: float

    def contains(self, q, tol: float = 1e-9) -> bool:
        return bool(_contains(self.kind, self.apex[0], self.apex[1], self.center[0],
                              self.center[1], self.radius, q[0], q[1], tol))

    def boundary_points(self, spacing: float) -> np.ndarray:
        """Points on the region boundary and spine, at most ``spacing`` apart."""
        pts = [_segment_points(self.apex, self.center, spacing)]
        ax, ay = self.apex
        cx, cy = self.center
        rho = self.radius
        if rho > 0:
            n = max(8, int(math.ceil(2 * math.pi * rho / spacing)))
            a = 2 * math.pi * np.arange(n) / n
            pts.append(np.column_stack((cx + rho * np.cos(a), cy + rho * np.sin(a))))
        d = math.hypot(cx - ax, cy - ay)
        if self.kind == CONE and d > rho > 0:
            for tp in _tangent_points(ax, ay, cx, cy, rho):
                pts.append(_segment_points(self.apex, tp, spacing))
        return np.vstack(pts)


def _segment_points(p, q, spacing):
    n = max(1, int(math.ceil(math.hypot(q[0] - p[0], q[1] - p[1]) / spacing)))
    t = np.linspace(0.0, 1.0, n + 1)[:, None]
    return np.asarray(p, dtype=np.float64) * (1 - t) + np.asarray(q, dtype=np.float64) * t


@njit
def _tangent_points(ax, ay, cx, cy, rho):
    ux = cx - ax
    uy = cy - ay
    d = math.sqrt(ux * ux + uy * uy)
    length = math.sqrt(d * d - rho * rho)
    half = math.asin(rho / d)
    base = math.atan2(uy, ux)
    return ((ax + length * math.cos(base + half), ay + length * math.sin(base + half)),
            (ax + length * math.cos(base - half), ay + length * math.sin(base - half)))


@njit
def _contains(kind, ax, ay, cx, cy, rho, qx, qy, tol):
    ex = qx - cx
    ey = qy - cy
    if ex * ex + ey * ey <= (rho + tol) * (rho + tol):
        return True
    if kind == DISC:
        return False
    # q = (1 - t) a + t y with |y - c| <= rho, some t in [0, 1]:
    # (|u|^2 - rho^2) t^2 - 2 (w.u) t + |w|^2 <= 0
    ux = cx - ax
    uy = cy - ay
    wx = qx - ax
    wy = qy - ay
    qa = ux * ux + uy * uy - rho * rho
    qb = -2.0 * (wx * ux + wy * uy)
    qc = wx * wx + wy * wy
    best = qc
    v1 = qa + qb + qc
    if v1 < best:
        best = v1
    if qa > 0.0:
        t = -qb / (2.0 * qa)
        if 0.0 < t < 1.0:
            vt = qa * t * t + qb * t + qc
            if vt < best:
                best = vt
    return best <= tol * (1.0 + qc)


def motion_prediction(state: UnicycleState, target) -> PredictionRegion:
    """Region bounding the closed-loop unicycle motion toward ``target``."""
    fwd, lat = body_components(state, target)
    target = (float(target[0]), float(target[1]))
    if fwd >= 0.0:
        return PredictionRegion(CONE, state.position, target, abs(lat))
    return PredictionRegion(DISC, state.position, target, math.hypot(fwd, lat))


@njit
def _segment_min(cd, gx0, gy0, gx1, gy1):
    """Smallest ``cd`` over cells the segment touches; -1 if it leaves the raster."""
    nrows, ncols = cd.shape
    ddx = gx1 - gx0
    ddy = gy1 - gy0
    length = math.sqrt(ddx * ddx + ddy * ddy)
    r0 = int(math.floor(gy0))
    c0 = int(math.floor(gx0))
    r1 = int(math.floor(gy1))
    c1 = int(math.floor(gx1))
    if not (0 <= r0 < nrows and 0 <= c0 < ncols and 0 <= r1 < nrows and 0 <= c1 < ncols):
        return -1.0
    if length == 0.0:
        return cd[r0, c0]
    rows, cols, tin = walk_buffers(length + 2.0)
    n = traverse(gx0, gy0, ddx / length, ddy / length, length, nrows, ncols, rows, cols, tin)
    best = np.inf
    for k in range(n):
        v = cd[rows[k], cols[k]]
        if v < best:
            best = v
    return best


@njit
def region_clearance(cd, kind, ax, ay, cx, cy, rho):
    """Clearance of a prediction region in grid units (grid-frame geometry).

    ``cd`` holds the distance from each cell center to the nearest unsafe cell
    center (0 on unsafe cells).  Returns 0 when an unsafe cell center lies in
    the region or the region leaves the raster, otherwise the minimum over the
    cells met by the boundary and spine of ``cd - 1/2``, floored at 0.
    """
    nrows, ncols = cd.shape
    best = _segment_min(cd, ax, ay, cx, cy)
    if best < 0.0:
        return 0.0
    d = math.sqrt((cx - ax) ** 2 + (cy - ay) ** 2)
    if rho > 0.0:
        if kind == CONE and d > rho:
            tps = _tangent_points(ax, ay, cx, cy, rho)
            for tp in tps:
                v = _segment_min(cd, ax, ay, tp[0], tp[1])
                if v < 0.0:
                    return 0.0
                if v < best:
                    best = v
        m = int(math.ceil(2.0 * math.pi * rho / 0.25))
        if m < 8:
            m = 8
        for k in range(m):
            a = 2.0 * math.pi * k / m
            px = cx + rho * math.cos(a)
            py = cy + rho * math.sin(a)
            r = int(math.floor(py))
            c = int(math.floor(px))
            if r < 0 or r >= nrows or c < 0 or c >= ncols:
                return 0.0
            if cd[r, c] < best:
                best = cd[r, c]
        # unsafe cell centers strictly inside the region
        lo_x = min(ax, cx - rho)
        hi_x = max(ax, cx + rho)
        lo_y = min(ay, cy - rho)
        hi_y = max(ay, cy + rho)
        r0 = max(0, int(math.floor(lo_y - 0.5)))
        r1 = min(nrows - 1, int(math.ceil(hi_y - 0.5)))
        c0 = max(0, int(math.floor(lo_x - 0.5)))
        c1 = min(ncols - 1, int(math.ceil(hi_x - 0.5)))
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                if cd[r, c] == 0.0 and _contains(kind, ax, ay, cx, cy, rho, c + 0.5, r + 0.5, 1e-9):
                    return 0.0
    best -= 0.5
    return best if best > 0.0 else 0.0


def dist_to_unsafe(region: PredictionRegion, spaces) -> float:
    """Distance (meters) from the region to the exterior of the control space."""
    res = spaces.resolution
    h = spaces.control_free.shape[0]
    ax, ay = world_to_grid(region.apex[0], region.apex[1], h, res)
    cx, cy = world_to_grid(region.center[0], region.center[1], h, res)
    cd = spaces.control_distance / res
    return float(region_clearance(cd, region.kind, ax, ay, cx, cy, region.radius / res)) * res


def in_control_space(position, spaces) -> bool:
    r, c = cell_of(position[0], position[1], spaces.control_free.shape[0], spaces.resolution)
    h, w = spaces.control_free.shape
    return 0 <= r < h and 0 <= c < w and bool(spaces.control_free[r, c])


def control_law(state: UnicycleState, path, spaces, params: ControlParams) -> ControlOutput:
    """Velocity, turn rate and path-parameter rate for the current state."""
    if not in_control_space(state.position, spaces):
        raise SafetyViolation(f"position ({state.position[0]:.3f}, {state.position[1]:.3f}) "
                              "left the control space")
    target = path.s_of(state.path_param)
    fwd, lat = body_components(state, target)
    v = min(params.v_max, params.k_v * max(0.0, fwd))
    w = params.k_w * math.atan2(lat, fwd) if (fwd != 0.0 or lat != 0.0) else 0.0
    w = max(-params.w_max, min(params.w_max, w))
    clearance = dist_to_unsafe(motion_prediction(state, target), spaces)
    s_rate = min(params.k_safety * clearance, params.k_s * (1.0 - state.path_param))
    return ControlOutput(v, w, max(0.0, s_rate), clearance)


def advance(state: UnicycleState, path, spaces, params: ControlParams):
    """One explicit-Euler tick; returns ``(next_state, control_output)``.

    The path-parameter increment is halved until the prediction region from
    the new position toward the new reference point is clear of unsafe cells
    (dropped entirely after a few tries).  This keeps the discrete-time loop
    inside the guarantee of the continuous one.
    """
    u = control_law(state, path, spaces, params)
    dt = params.dt
    x, y = state.position
    nx = x + dt * u.v * math.cos(state.heading)
    ny = y + dt * u.v * math.sin(state.heading)
    heading = state.heading + dt * u.w
    s0 = state.path_param
    s1 = min(1.0, s0 + dt * u.s_rate)
    probe = UnicycleState((nx, ny), heading, s0)
    for _ in range(12):
        if s1 <= s0:
            break
        if dist_to_unsafe(motion_prediction(probe, path.s_of(s1)), spaces) > 0.0:
            break
        s1 = s0 + 0.5 * (s1 - s0)
    else:
        s1 = s0
    return replace(probe, path_param=max(s0, s1)), u


def step(state: UnicycleState, path, spaces, params: ControlParams) -> UnicycleState:
    return advance(state, path, spaces, params)[0]
