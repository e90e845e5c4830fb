from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from proexplore.costmap import (CostField, NavKind, PathPlan, ShortestPathTree, build_cost_field,
                                navigation_cost, optimal_path, travel_cost)
from proexplore.errors import ConfigError
from proexplore.occupancy import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, safe_spaces
from proexplore.oracles import bellman_ford, brute_distance


def uniform_field(shape, c=1.0, res=0.1, blocked=None):
    ok = np.ones(shape, dtype=bool) if blocked is None else ~np.asarray(blocked, dtype=bool)
    visit = np.where(ok, c, np.inf)
    return CostField(visit, visit, visit, 1.0, 1.0, res, ok)


def center(field, r, c):
    return field.center((r, c))


def hand_map():
    """12x12 room: wall ring, a pillar and an unknown pocket."""
    states = np.full((12, 12), FREE, dtype=np.int8)
    states[0, :] = states[-1, :] = states[:, 0] = states[:, -1] = OCCUPIED
    states[5:7, 5:7] = OCCUPIED
    states[1:4, 8:11] = UNKNOWN
    return OccupancyGrid.from_states(states, 0.1)


def test_no_unknown_saturates_alpha():
    states = np.full((8, 8), FREE, dtype=np.int8)
    grid = OccupancyGrid.from_states(states, 0.1)
    field = build_cost_field(grid, safe_spaces(grid, 0.1, 0.05), 0.7, 0.5)
    assert np.all(field.dist2unknown == 0.7)


def test_transforms_match_brute_force_on_hand_map():
    grid = hand_map()
    spaces = safe_spaces(grid, 0.1, 0.05)
    field = build_cost_field(grid, spaces, 10.0, 10.0)
    ref_u = brute_distance(grid.unknown, 0.1)
    ref_c = brute_distance(~spaces.planning_free, 0.1, outside_is_site=True)
    assert np.max(np.abs(field.dist2unknown - ref_u)) <= 0.05
    assert np.max(np.abs(field.dist2collision - ref_c)) <= 0.05


def test_cost_field_invariants():
    grid = hand_map()
    spaces = safe_spaces(grid, 0.1, 0.05)
    field = build_cost_field(grid, spaces, 0.6, 0.4)
    ok = spaces.planning_free
    assert ok.any()
    assert np.all(np.isfinite(field.visit_cost[ok])) and np.all(field.visit_cost[ok] > 0)
    assert np.all(np.isinf(field.visit_cost[~ok]))
    assert np.all(field.dist2collision[ok] > 0)
    assert np.all(field.dist2unknown[~grid.unknown] > 0)
    assert field.dist2unknown.max() <= 0.6 and field.dist2collision.max() <= 0.4
    np.testing.assert_allclose(field.visit_cost[ok], field.dist2unknown[ok] / field.dist2collision[ok])


def test_boundary_cell_has_large_visit_cost():
    grid = hand_map()
    spaces = safe_spaces(grid, 0.1, 0.05)
    field = build_cost_field(grid, spaces, 2.0, 2.0)
    ok = spaces.planning_free
    edge = ok & (field.dist2collision <= 0.1 + 1e-9)
    assert edge.any()
    assert np.all(field.dist2collision[edge] == pytest.approx(0.1))
    assert field.visit_cost[edge].mean() > field.visit_cost[ok & ~edge].mean()


def test_bad_saturation():
    grid = hand_map()
    with pytest.raises(ConfigError):
        build_cost_field(grid, safe_spaces(grid, 0.1, 0.05), 0.0, 1.0)


def test_start_equals_goal():
    field = uniform_field((5, 5))
    p = center(field, 2, 2)
    plan = optimal_path(field, p, p)
    assert len(plan.waypoints) == 1 and plan.total_cost == 0.0
    assert travel_cost(field, p, p) == 0.0


def test_straight_corridor():
    blocked = np.ones((3, 12), dtype=bool)
    blocked[1, :] = False
    field = uniform_field((3, 12), c=2.5, blocked=blocked)
    plan = optimal_path(field, center(field, 1, 0), center(field, 1, 11))
    assert np.all(plan.waypoints[:, 1] == plan.waypoints[0, 1])
    assert plan.total_cost == pytest.approx(2.5 * 1.1, rel=1e-12)
    assert plan.total_length == pytest.approx(1.1)


def test_sealed_room_is_unreachable():
    blocked = np.zeros((9, 9), dtype=bool)
    blocked[:, 4] = True
    field = uniform_field((9, 9), blocked=blocked)
    a, b = center(field, 4, 1), center(field, 4, 7)
    assert travel_cost(field, a, b) == math.inf
    assert optimal_path(field, a, b) is None


def test_dijkstra_matches_bellman_ford_on_random_10x10():
    rng = np.random.default_rng(10)
    for _ in range(20):
        ok = rng.random((10, 10)) < 0.8
        visit = np.where(ok, rng.uniform(0.2, 4.0, (10, 10)), np.inf)
        field = CostField(visit, visit, visit, 1.0, 1.0, 0.1, ok)
        start = tuple(np.argwhere(ok)[0])
        tree = ShortestPathTree(field, start)
        ref = bellman_ford(visit, start, 0.1)
        assert np.array_equal(np.isinf(tree.dist), np.isinf(ref))
        fin = np.isfinite(ref)
        np.testing.assert_allclose(tree.dist[fin], ref[fin], rtol=1e-12, atol=0)


costed = hnp.arrays(np.float64, st.tuples(st.integers(2, 9), st.integers(2, 9)),
                    elements=st.one_of(st.just(np.inf), st.floats(0.1, 5.0)))


def _endpoints(visit, data):
    cells = np.argwhere(np.isfinite(visit))
    i = data.draw(st.integers(0, len(cells) - 1))
    j = data.draw(st.integers(0, len(cells) - 1))
    return tuple(cells[i]), tuple(cells[j])


@given(costed, st.data())
def test_optimal_substructure_and_path_safety(visit, data):
    ok = np.isfinite(visit)
    if not ok.any():
        return
    field = CostField(visit, visit, visit, 1.0, 1.0, 0.1, ok)
    a, b = _endpoints(visit, data)
    plan = ShortestPathTree(field, a).path_to(b)
    if plan is None:
        return
    total = plan.total_cost
    assert plan.start == center(field, *a) and plan.end == center(field, *b)
    assert np.all(np.diff(plan.cumulative_cost) >= 0)
    for (r, c), cum in zip(plan.cells, plan.cumulative_cost):
        assert ok[r, c]
        rest = ShortestPathTree(field, (r, c)).cost_to(b)
        assert cum + rest == pytest.approx(total, abs=1e-9)
    assert travel_cost(field, center(field, *a), center(field, *b)) == pytest.approx(total, abs=1e-12)


@given(costed, st.data())
def test_reachability_is_symmetric(visit, data):
    ok = np.isfinite(visit)
    if not ok.any():
        return
    field = CostField(visit, visit, visit, 1.0, 1.0, 0.1, ok)
    a, b = _endpoints(visit, data)
    ab = ShortestPathTree(field, a).cost_to(b)
    ba = ShortestPathTree(field, b).cost_to(a)
    assert math.isfinite(ab) == math.isfinite(ba)
    if math.isfinite(ab):
        assert ab == pytest.approx(ba, rel=1e-12)


def test_ties_are_deterministic():
    field = uniform_field((7, 7))
    a = ShortestPathTree(field, (0, 0)).cells_to((3, 6))
    b = ShortestPathTree(field, (0, 0)).cells_to((3, 6))
    assert np.array_equal(a, b)


def test_navigation_cost_kinds():
    blocked = np.zeros((9, 9), dtype=bool)
    blocked[1:, 4] = True
    field = uniform_field((9, 9), blocked=blocked)
    a, b = center(field, 8, 1), center(field, 8, 7)
    assert navigation_cost(field, a, b, "uniform") == 1.0
    euc = navigation_cost(field, a, b, NavKind.EUCLIDEAN)
    geo = navigation_cost(field, a, b, "geodesic")
    assert euc == pytest.approx(0.6)
    assert euc < geo < math.inf
    tree = ShortestPathTree(field, (8, 1))
    assert navigation_cost(field, a, b, "geodesic", tree=tree) == geo
    with pytest.raises(ConfigError):
        navigation_cost(field, a, b, "manhattan")


def test_geodesic_equals_scaled_euclidean_on_a_line():
    field = uniform_field((5, 15), c=0.4)
    a, b = center(field, 2, 1), center(field, 2, 13)
    assert navigation_cost(field, a, b, "geodesic") == pytest.approx(
        0.4 * navigation_cost(field, a, b, "euclidean"), rel=1e-12)


def test_path_parameterization():
    plan = PathPlan(np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 1.0]]), np.array([0.0, 1.0, 2.0]))
    assert plan.s_of(0) == (0.0, 0.0) and plan.s_of(1) == (3.0, 1.0)
    assert plan.s_of(0.5) == pytest.approx((2.0, 0.0))
    assert plan.s_of(0.875) == pytest.approx((3.0, 0.5))
    assert plan.total_length == pytest.approx(4.0)
    pts = np.array([plan.s_of(s) for s in np.linspace(0, 1, 401)])
    assert np.max(np.hypot(*np.diff(pts, axis=0).T)) <= 4.0 / 400 + 1e-12
