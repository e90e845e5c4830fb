"""Safe, action-aware frontier exploration with a simulated unicycle robot."""
from __future__ import annotations

from .costmap import CostField, NavKind, PathPlan, build_cost_field, optimal_path, travel_cost
from .control import ControlParams, UnicycleState, control_law, motion_prediction, step
from .errors import ConfigError, PlanningError, SafetyViolation
from .explorer import (ExplorationConfig, Outcome, RunRecord, Strategy, exploration_plan,
                       run, run_online, run_persistent, run_preventive)
from .frontier import FrontierRegion, InfoKind, cluster_frontiers, detect_frontiers
from .occupancy import CellState, OccupancyGrid, integrate_scan, mapping_percentage, safe_spaces
from .viewpoint import ViewpointQuery
from .world import GroundTruthWorld, load_world, read_world, simulate_scan

__version__ = "0.1.0"
