"""Closed-loop exploration: sense, map, select, plan and follow.

Every control tick runs the same synchronous schedule:

1. scan and fold the scan into the map (every ``scan_period``),
2. drop stale frontier cells after a fruitless dwell at the path end,
3. run the strategy's replanning check, replanning from ``p(s)``,
4. apply the path-following law and take one Euler step,
5. log the tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .control import ControlParams, UnicycleState, advance, in_control_space
from .costmap import NavKind, PathPlan, build_cost_field
from .errors import ConfigError, PlanningError, SafetyViolation
from .frontier import InfoKind, cluster_frontiers, detect_frontiers
from .occupancy import (OccupancyGrid, UNKNOWN, integrate_scan, mapping_percentage,
                        safe_spaces)
from .viewpoint import MapView, ViewpointQuery, is_near
from .world import InvalidOriginError, simulate_scan


NEVER = np.iinfo(np.int64).max


class Strategy(Enum):
    PERSISTENT = "persistent"
    PREVENTIVE = "preventive"
    ONLINE = "online"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ConfigError(f"unknown strategy {value!r}") from None


class Outcome(Enum):
    COMPLETE = "COMPLETE"
    TIMEOUT = "TIMEOUT"
    SAFETY_VIOLATION = "SAFETY_VIOLATION"


@dataclass(frozen=True)
class ExplorationConfig:
    """Run parameters.  ``None`` fields are resolved against the world at run time."""

    strategy: Strategy = Strategy.PERSISTENT
    info_kind: InfoKind = InfoKind.VOLUME
    nav_kind: NavKind = NavKind.GEODESIC
    replan_period: float = 1.0
    step_budget: int = None
    scan_period: float = 0.1
    robot_radius: float = 0.35
    clearance: float = 0.1
    visibility_tolerance: float = None  # default 2 cells
    info_threshold: float = 0.0
    query_margin: float = None  # default one cell diagonal
    alpha_max: float = None  # default 2 R
    beta_max: float = None  # default 5 (r + clearance)
    frontier_connectivity: int = 4
    stall_scans: int = 10  # 0 disables stale-frontier marking
    control: ControlParams = field(default_factory=ControlParams)

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy.parse(self.strategy))
        object.__setattr__(self, "info_kind", InfoKind.parse(self.info_kind))
        object.__setattr__(self, "nav_kind", NavKind.parse(self.nav_kind))
        if not self.replan_period > 0:
            raise ConfigError("replan_period must be positive")
        if self.step_budget is not None and self.step_budget <= 0:
            raise ConfigError("step_budget must be positive")
        if not self.scan_period > 0:
            raise ConfigError("scan_period must be positive")
        if not (self.robot_radius > 0 and self.clearance > 0):
            raise ConfigError("robot_radius and clearance must be positive")
        if self.frontier_connectivity not in (4, 8):
            raise ConfigError("frontier_connectivity must be 4 or 8")
        if self.stall_scans < 0:
            raise ConfigError("stall_scans must be non-negative")

    def resolved(self, world) -> "ExplorationConfig":
        """Copy with every ``None`` default filled in for ``world``."""
        res = world.resolution
        out = self
        if out.visibility_tolerance is None:
            out = replace(out, visibility_tolerance=2.0 * res)
        if out.query_margin is None:
            out = replace(out, query_margin=res * math.sqrt(2.0))
        if out.alpha_max is None:
            out = replace(out, alpha_max=2.0 * world.sensing_range)
        if out.beta_max is None:
            out = replace(out, beta_max=5.0 * (out.robot_radius + out.clearance))
        if out.step_budget is None:
            free_cells = int(np.count_nonzero(world.free))
            budget = 20.0 * (free_cells * res / out.control.v_max) / out.control.dt
            out = replace(out, step_budget=int(math.ceil(budget)))
        return out

    def query(self, world) -> ViewpointQuery:
        cfg = self.resolved(world)
        return ViewpointQuery(cfg.visibility_tolerance, world.sensing_range - cfg.query_margin,
                              cfg.info_threshold, cfg.info_kind, cfg.nav_kind)


@dataclass
class TickRecord:
    tick: int
    time_s: float
    x: float
    y: float
    theta: float
    s: float
    distance: float
    mapping_pct: float
    n_regions: int
    event: str
    path_id: int
    v: float = 0.0
    w: float = 0.0
    s_rate: float = 0.0
    dist_to_unsafe: float = 0.0
    in_control_space: bool = True


@dataclass
class ReplanRecord:
    tick: int
    time_s: float
    start: tuple
    region_id: int
    viewpoint: tuple
    path_length: float
    travel_cost: float
    path_id: int
    robot: tuple = None  # robot position when the replan fired
    previous_path: np.ndarray = None  # waypoints of the path being replaced
    previous_s: float = 0.0


@dataclass
class RunRecord:
    strategy: Strategy
    config: ExplorationConfig
    start_pose: tuple
    ticks: list = field(default_factory=list)
    replans: list = field(default_factory=list)
    outcome: Outcome = None
    message: str = ""
    livelock_prone: bool = False
    final_grid: OccupancyGrid = None
    known_tick: np.ndarray = None  # tick each cell was first classified; -1 warm-up, NEVER if not
    stale: np.ndarray = None  # frontier cells dropped after a fruitless dwell
    warmup_scans: int = 0

    @property
    def map_curve(self):
        return [(t.distance, t.mapping_pct) for t in self.ticks]

    @property
    def total_distance(self) -> float:
        return self.ticks[-1].distance if self.ticks else 0.0

    @property
    def total_time(self) -> float:
        return self.ticks[-1].time_s if self.ticks else 0.0

    @property
    def final_mapping_pct(self) -> float:
        return self.ticks[-1].mapping_pct if self.ticks else 0.0

    def map_at(self, tick: int) -> OccupancyGrid:
        """Latched classification as it stood after the scan of ``tick``."""
        states = np.where(self.known_tick <= tick,
                          self.final_grid.state, UNKNOWN).astype(np.int8)
        return OccupancyGrid.from_states(states, self.final_grid.resolution)


class _Belief:
    """Occupancy grid plus the derived spaces, cost field and selection view.

    ``stale`` marks frontier cells that stayed visible from a viewpoint while
    the robot dwelt beside it and the map stopped changing.  The sensor cannot
    resolve their unknown neighbours from there, so they are left out of the
    frontier set used for selection.
    """

    def __init__(self, world, cfg: ExplorationConfig, query: ViewpointQuery):
        self.world = world
        self.cfg = cfg
        self.query = query
        self.grid = OccupancyGrid.for_world(world)
        self.known_tick = np.full(self.grid.shape, NEVER, dtype=np.int64)
        self.stale = np.zeros(self.grid.shape, dtype=bool)
        self.last_change_tick = 0
        self._ready = False
        self._view = None

    def sense(self, position, tick):
        before = self.grid.state.copy()
        integrate_scan(self.grid, simulate_scan(self.world, position))
        fresh = (before == UNKNOWN) & (self.grid.state != UNKNOWN)
        self.known_tick[fresh] = tick
        if fresh.any() or not self._ready:
            self._ready = True
            self.last_change_tick = tick
            self.spaces = safe_spaces(self.grid, self.cfg.robot_radius, self.cfg.clearance)
            self.field = build_cost_field(self.grid, self.spaces, self.cfg.alpha_max, self.cfg.beta_max)
            self.raw_frontier = detect_frontiers(self.grid, self.cfg.frontier_connectivity)
            self.frontier = self.raw_frontier & ~self.stale
            self._view = None
        elif self.cfg.info_kind is InfoKind.ENTROPY:
            self._view = None  # entropy tracks probabilities, not only the labels

    def mark_stale(self, v) -> int:
        vis = self.view.visible(v)
        n = int(np.count_nonzero(vis))
        if n:
            self.stale |= vis
            self.frontier = self.raw_frontier & ~self.stale
            self._view = None
        return n

    @property
    def view(self) -> MapView:
        if self._view is None:
            regions = cluster_frontiers(self.frontier, self.grid.resolution, self.grid.prob)
            self._view = MapView(self.grid, self.spaces, self.field, self.query,
                                 frontier=self.frontier, regions=regions)
        return self._view

    def n_regions(self) -> int:
        return len(self.view.regions)


def _snap_start(belief: _Belief, path: PathPlan, s: float):
    """Planning start at ``p(s)``, nudged to the nearest path cell if its own cell is unsafe."""
    p = path.s_of(s)
    cell = belief.field.cell_of(p)
    if belief.field.traversable(cell):
        return p, cell
    if path.cells is not None:
        alt = path.nearest_cell_at(s)
        if belief.field.traversable(alt):
            return p, alt
    raise PlanningError(f"path point ({p[0]:.3f}, {p[1]:.3f}) is outside the planning space")


def exploration_plan(view: MapView, start, start_cell=None):
    """Path from ``start`` to the viewpoint of the best frontier region, or ``None``.

    Returns ``(plan, score)``.  The plan begins exactly at ``start`` and then
    follows cell centers of the minimum travel-cost lattice path.
    """
    field_ = view.field
    if start_cell is None:
        start_cell = field_.cell_of(start)
    if not field_.traversable(start_cell):
        raise PlanningError("start is outside the planning space")
    best = view.select_target(start, start_cell)
    if best is None:
        return None, None
    tree = view.tree(start, start_cell)
    lattice = tree.path_to(best.viewpoint_cell)
    if lattice is None:
        raise PlanningError(f"viewpoint of region {best.region.id} is unreachable")
    pts = np.vstack(([start], lattice.waypoints))
    costs = np.concatenate(([0.0], lattice.cumulative_cost))
    cells = np.vstack(([start_cell], lattice.cells))
    return PathPlan(pts, costs, cells), best


def _warm_up(belief: _Belief, position, max_scans: int = 5) -> int:
    """Stationary scans before tick 0 until the start cell is in the planning space."""
    n = 0
    while n < max_scans:
        belief.sense(position, -1)
        n += 1
        if belief.field.traversable(belief.field.cell_of(position)):
            return n
    raise PlanningError(f"start ({position[0]:.3f}, {position[1]:.3f}) is not in the planning "
                        f"space after {max_scans} scans")


def replan_due(strategy: Strategy, view: MapView, position, end, tick: int,
               replan_every: int = 1) -> bool:
    """Replanning trigger of each strategy, checked once per tick."""
    if strategy is Strategy.PERSISTENT:
        return is_near(position, end, view.query.eta)
    if strategy is Strategy.PREVENTIVE:
        return view.visible_volume(end) <= view.query.info_threshold
    return tick % replan_every == 0


def _initial_heading(start_pose):
    return float(start_pose[2]) if len(start_pose) > 2 else 0.0


def run(world, config: ExplorationConfig, start_pose, on_tick=None) -> RunRecord:
    """Simulate one exploration run under ``config.strategy``.

    ``on_tick(tick, state, belief_grid)`` is called after the sensing and
    replanning phases of every tick.
    """
    cfg = config.resolved(world)
    query = config.query(world)
    strategy = cfg.strategy
    params = cfg.control
    dt = params.dt
    scan_every = max(1, int(round(cfg.scan_period / dt)))
    replan_every = max(1, int(round(cfg.replan_period / dt)))

    record = RunRecord(strategy, cfg, tuple(start_pose))
    record.livelock_prone = strategy is Strategy.ONLINE and cfg.nav_kind is not NavKind.GEODESIC
    belief = _Belief(world, cfg, query)
    state = UnicycleState((start_pose[0], start_pose[1]), _initial_heading(start_pose), 0.0)
    path = PathPlan.point(state.position, world.cell_of(*state.position))
    path_id = 0
    distance = 0.0
    tick = 0
    record.warmup_scans = _warm_up(belief, state.position)

    def finish(outcome, message=""):
        record.outcome = outcome
        record.message = message
        record.final_grid = belief.grid
        record.known_tick = belief.known_tick
        record.stale = belief.stale
        return record

    while True:
        events = []
        time_s = tick * dt
        if tick % scan_every == 0:
            try:
                belief.sense(state.position, tick)
            except InvalidOriginError as exc:  # the last step ended inside an obstacle
                row = _tick_row(tick, time_s, state, distance, mapping_percentage(belief.grid),
                                belief, "safety_violation", path_id)
                record.ticks.append(row)
                return finish(Outcome.SAFETY_VIOLATION, str(exc))
        pct = mapping_percentage(belief.grid)
        end = path.end
        if (cfg.stall_scans and is_near(state.position, end, query.eta)
                and tick - belief.last_change_tick >= cfg.stall_scans * scan_every
                and belief.mark_stale(end)):
            events.append("stale")

        try:
            if replan_due(strategy, belief.view, state.position, end, tick, replan_every):
                if belief.view.is_complete(end):
                    events.append("complete")
                    record.ticks.append(_tick_row(tick, time_s, state, distance, pct, belief,
                                                  ";".join(events), path_id))
                    return finish(Outcome.COMPLETE)
                start, start_cell = _snap_start(belief, path, state.path_param)
                plan, best = exploration_plan(belief.view, start, start_cell)
                if plan is None:
                    events.append("complete")
                    record.ticks.append(_tick_row(tick, time_s, state, distance, pct, belief,
                                                  ";".join(events), path_id))
                    return finish(Outcome.COMPLETE, "no qualifying region from p(s)")
                path_id += 1
                record.replans.append(ReplanRecord(
                    tick, time_s, tuple(start), best.region.id, tuple(best.viewpoint),
                    plan.total_length, plan.total_cost, path_id, state.position,
                    path.waypoints, state.path_param))
                path = plan
                state = replace(state, path_param=0.0)
                events.append("replan")
        except PlanningError as exc:
            events.append("planning_error")
            record.ticks.append(_tick_row(tick, time_s, state, distance, pct, belief,
                                          ";".join(events), path_id))
            return finish(Outcome.TIMEOUT, str(exc))

        if on_tick is not None:
            on_tick(tick, state, belief)

        row = _tick_row(tick, time_s, state, distance, pct, belief, "", path_id)
        row.in_control_space = in_control_space(state.position, belief.spaces)
        if tick >= cfg.step_budget:
            events.append("timeout")
            row.event = ";".join(events)
            record.ticks.append(row)
            return finish(Outcome.TIMEOUT, f"step budget {cfg.step_budget} exhausted")
        try:
            nxt, u = advance(state, path, belief.spaces, params)
        except SafetyViolation as exc:
            events.append("safety_violation")
            row.event = ";".join(events)
            record.ticks.append(row)
            return finish(Outcome.SAFETY_VIOLATION, str(exc))
        row.v, row.w, row.s_rate, row.dist_to_unsafe = u.v, u.w, u.s_rate, u.dist_to_unsafe
        row.event = ";".join(events)
        record.ticks.append(row)
        distance += math.hypot(nxt.position[0] - state.position[0],
                               nxt.position[1] - state.position[1])
        state = nxt
        tick += 1


def _tick_row(tick, time_s, state, distance, pct, belief, event, path_id) -> TickRecord:
    return TickRecord(tick, time_s, state.position[0], state.position[1], state.heading,
                      state.path_param, distance, pct, belief.n_regions(), event, path_id,
                      in_control_space=in_control_space(state.position, belief.spaces))


def run_persistent(world, config: ExplorationConfig, start_pose, on_tick=None) -> RunRecord:
    return run(world, replace(config, strategy=Strategy.PERSISTENT), start_pose, on_tick)


def run_preventive(world, config: ExplorationConfig, start_pose, on_tick=None) -> RunRecord:
    return run(world, replace(config, strategy=Strategy.PREVENTIVE), start_pose, on_tick)


def run_online(world, config: ExplorationConfig, start_pose, on_tick=None) -> RunRecord:
    return run(world, replace(config, strategy=Strategy.ONLINE), start_pose, on_tick)
