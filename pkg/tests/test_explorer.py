from __future__ import annotations

import math

import numpy as np
import pytest

import proexplore.explorer as ex
from proexplore.control import ControlParams
from proexplore.costmap import PathPlan, build_cost_field
from proexplore.errors import ConfigError
from proexplore.explorer import (ExplorationConfig, Outcome, Strategy, exploration_plan, run,
                                 run_online, run_persistent, run_preventive)
from proexplore.frontier import detect_frontiers
from proexplore.occupancy import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, safe_spaces
from proexplore.viewpoint import MapView, ViewpointQuery

from conftest import box_world

DEMO_POSE = (1.05, 1.05, 0.0)
CFG = ExplorationConfig()


@pytest.fixture(scope="module")
def demo_runs(demo):
    return {s: run(demo, replace_strategy(s), DEMO_POSE) for s in Strategy}


def replace_strategy(strategy, **kw):
    return ExplorationConfig(strategy=strategy, **kw)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExplorationConfig(replan_period=0)
    with pytest.raises(ConfigError):
        ExplorationConfig(step_budget=0)
    with pytest.raises(ConfigError):
        ExplorationConfig(strategy="greedy")
    with pytest.raises(ConfigError):
        ExplorationConfig(frontier_connectivity=6)


def test_resolved_defaults(demo):
    cfg = CFG.resolved(demo)
    assert cfg.visibility_tolerance == pytest.approx(0.2)
    assert cfg.alpha_max == pytest.approx(3.0) and cfg.beta_max == pytest.approx(2.25)
    free = int(demo.free.sum())
    assert cfg.step_budget == math.ceil(20 * free * 0.1 / 1.0 / 0.1)


def _view(states, robot_radius=0.35, clearance=0.1):
    grid = OccupancyGrid.from_states(states, 0.1)
    spaces = safe_spaces(grid, robot_radius, clearance)
    field = build_cost_field(grid, spaces, 3.0, 2.25)
    return MapView(grid, spaces, field, ViewpointQuery(0.2, 1.5 - 0.1 * math.sqrt(2)))


def test_plan_none_without_frontiers():
    s = np.full((30, 30), FREE, dtype=np.int8)
    s[0, :] = s[-1, :] = s[:, 0] = s[:, -1] = OCCUPIED
    view = _view(s)
    plan, best = exploration_plan(view, (1.53, 1.47))
    assert plan is None and best is None


def test_plan_to_single_region():
    s = np.full((30, 60), FREE, dtype=np.int8)
    s[0, :] = s[-1, :] = s[:, 0] = s[:, -1] = OCCUPIED
    s[10:20, 50:59] = UNKNOWN
    view = _view(s)
    start = (0.83, 1.52)
    plan, best = exploration_plan(view, start)
    assert plan.start == start
    assert plan.end == pytest.approx(best.viewpoint)
    r, c = best.viewpoint_cell
    vx, vy = (c + 0.5) * 0.1, (30 - r - 0.5) * 0.1
    assert math.hypot(plan.end[0] - vx, plan.end[1] - vy) <= 0.05
    assert all(view.spaces.planning_free[r, c] for r, c in plan.cells)


def small_room():
    # 1.6 m square room; everything is inside the sensing range from the center
    return box_world(16, 16, 0.1)


def test_small_room_completes_immediately():
    world = small_room()
    rec = run_persistent(world, CFG, (0.8, 0.8, 0.0))
    assert rec.outcome is Outcome.COMPLETE
    assert rec.replans == []
    assert len(rec.ticks) == 1 and rec.ticks[0].event == "complete"
    rec = run_online(world, CFG, (0.8, 0.8, 0.0))
    assert rec.outcome is Outcome.COMPLETE and rec.ticks[-1].tick == 0


def test_first_check_fires_at_start(demo_runs):
    rec = demo_runs[Strategy.PERSISTENT]
    first = rec.replans[0]
    assert first.tick == 0
    assert first.start == pytest.approx(DEMO_POSE[:2])


def test_demo_runs_complete(demo_runs):
    for rec in demo_runs.values():
        assert rec.outcome is Outcome.COMPLETE, rec.message


def test_run_invariants(demo_runs):
    for rec in demo_runs.values():
        pct = [t.mapping_pct for t in rec.ticks]
        dist = [t.distance for t in rec.ticks]
        assert np.all(np.diff(pct) >= 0) and np.all(np.diff(dist) >= 0)
        assert all(t.in_control_space for t in rec.ticks)
        by_path = {}
        for t in rec.ticks:
            by_path.setdefault(t.path_id, []).append(t.s)
        for ss in by_path.values():
            assert np.all(np.diff(ss) >= 0)
        assert rec.map_curve[-1] == (rec.total_distance, rec.final_mapping_pct)


def test_replans_start_at_path_point(demo_runs):
    for rec in demo_runs.values():
        for r in rec.replans:
            prev = PathPlan(r.previous_path, np.zeros(len(r.previous_path)))
            assert r.start == prev.s_of(r.previous_s)


def test_completion_holds_at_final_path_end(demo, demo_runs):
    for rec in demo_runs.values():
        cfg = rec.config
        grid = rec.final_grid
        spaces = safe_spaces(grid, cfg.robot_radius, cfg.clearance)
        field = build_cost_field(grid, spaces, cfg.alpha_max, cfg.beta_max)
        frontier = detect_frontiers(grid, cfg.frontier_connectivity) & ~rec.stale
        view = MapView(grid, spaces, field, cfg.query(demo), frontier=frontier)
        end = rec.replans[-1].viewpoint
        assert view.is_complete(end)
        assert all(s.actionable <= cfg.info_threshold for s in view.scores(end))


def test_map_history_is_consistent(demo_runs):
    rec = demo_runs[Strategy.PERSISTENT]
    last = rec.ticks[-1].tick
    assert np.array_equal(rec.map_at(last).state, rec.final_grid.state)
    pcts = [np.mean(rec.map_at(t).state != UNKNOWN) for t in (0, last // 2, last)]
    assert pcts == sorted(pcts)
    assert pcts[0] == pytest.approx(rec.ticks[0].mapping_pct)


def test_online_replans_on_schedule(demo_runs):
    rec = demo_runs[Strategy.ONLINE]
    ticks = [r.tick for r in rec.replans]
    gaps = np.diff(ticks)
    every = round(rec.config.replan_period / rec.config.control.dt)
    assert np.all(np.abs(gaps - every) <= 1)
    assert not rec.livelock_prone


def test_online_euclidean_is_flagged(demo):
    rec = run_online(demo, ExplorationConfig(nav_kind="euclidean", step_budget=3), DEMO_POSE)
    assert rec.livelock_prone


def test_preventive_replans_before_arrival(demo_runs):
    rec = demo_runs[Strategy.PREVENTIVE]
    eta = rec.config.visibility_tolerance
    early = [r for r in rec.replans[1:]
             if math.dist(r.robot, tuple(r.previous_path[-1])) > eta]
    assert early, "no replan fired before reaching the viewpoint"


def test_preventive_matches_persistent_while_triggers_agree(demo, monkeypatch):
    """Both loops differ only through their trigger, so they agree until it first disagrees."""
    original = ex.replan_due
    seen = []

    def spy(strategy, view, position, end, tick, replan_every=1):
        a = original(Strategy.PERSISTENT, view, position, end, tick, replan_every)
        b = original(Strategy.PREVENTIVE, view, position, end, tick, replan_every)
        seen.append((tick, a, b))
        return a if strategy is Strategy.PERSISTENT else b

    monkeypatch.setattr(ex, "replan_due", spy)
    pers = run(demo, ExplorationConfig(strategy="persistent"), DEMO_POSE)
    split = next(t for t, a, b in seen if a != b)
    prev = run(demo, ExplorationConfig(strategy="preventive", step_budget=split + 1), DEMO_POSE)
    assert split > 0 and pers.replans[0].tick < split
    before = [t for t in pers.ticks if t.tick < split]
    assert len(before) > 1
    for a, b in zip(before, prev.ticks):
        assert (a.x, a.y, a.theta, a.s, a.mapping_pct, a.path_id) == \
               (b.x, b.y, b.theta, b.s, b.mapping_pct, b.path_id)


def test_replan_due_rules(demo):
    s = np.full((30, 30), FREE, dtype=np.int8)
    s[0, :] = s[-1, :] = s[:, 0] = s[:, -1] = OCCUPIED
    view = _view(s)
    x = (1.5, 1.5)
    assert ex.replan_due(Strategy.PERSISTENT, view, x, (1.6, 1.5), 3)
    assert not ex.replan_due(Strategy.PERSISTENT, view, x, (2.0, 1.5), 3)
    assert ex.replan_due(Strategy.PREVENTIVE, view, x, (2.0, 1.5), 3)  # nothing left to see
    assert ex.replan_due(Strategy.ONLINE, view, x, x, 20, 10)
    assert not ex.replan_due(Strategy.ONLINE, view, x, x, 21, 10)


def test_step_budget_timeout(demo):
    rec = run(demo, ExplorationConfig(step_budget=25), DEMO_POSE)
    assert rec.outcome is Outcome.TIMEOUT
    assert "timeout" in rec.ticks[-1].event and rec.ticks[-1].tick == 25


def test_excessive_gains_end_in_safety_violation(demo):
    params = ControlParams(k_v=40.0, v_max=40.0, w_max=40.0)
    rec = run(demo, ExplorationConfig(control=params, step_budget=2000), DEMO_POSE)
    assert rec.outcome is Outcome.SAFETY_VIOLATION
    assert rec.ticks[-1].event.endswith("safety_violation")


def test_strategy_wrappers_agree_with_run(demo):
    cfg = ExplorationConfig(step_budget=40)
    for fn, strat in ((run_persistent, "persistent"), (run_preventive, "preventive"),
                      (run_online, "online")):
        a = fn(demo, cfg, DEMO_POSE)
        b = run(demo, ExplorationConfig(strategy=strat, step_budget=40), DEMO_POSE)
        assert a.strategy is Strategy(strat)
        assert [(t.x, t.y) for t in a.ticks] == [(t.x, t.y) for t in b.ticks]


def test_unreachable_start_is_rejected(demo):
    with pytest.raises(Exception):
        run(demo, CFG, (0.05, 0.05, 0.0))
