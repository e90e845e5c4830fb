"""Batch experiments: flat ``key = value`` configuration, run scheduling and CSV artifacts."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .control import ControlParams
from .costmap import NavKind
from .errors import ConfigError
from .explorer import ExplorationConfig, Outcome, Strategy, run
from .frontier import InfoKind
from .occupancy import OccupancyGrid, UNKNOWN, pgm_text
from .world import WorldFormatError, read_world

BUNDLED_POSES = {
    "demo": ((1.05, 1.05, 0.0), (7.05, 1.05, 3.1416)),
    "office": ((4.05, 8.45, 0.0), (8.05, 6.0, 1.5708), (4.05, 2.45, 0.0), (13.55, 9.45, 3.1416)),
}

DEFAULT_COMBINATIONS = "persistent/volume/geodesic; preventive/volume/geodesic; online/volume/geodesic"

AUTO = "auto"

# key -> default text; every accepted key is listed here
DEFAULTS = {
    "world": "demo",
    "poses": AUTO,
    "combinations": AUTO,
    "strategy": AUTO,
    "info_kind": "volume",
    "nav_kind": "geodesic",
    "replan_period": "1.0",
    "step_budget": AUTO,
    "scan_period": "0.1",
    "robot_radius": "0.35",
    "clearance": "0.1",
    "eta": AUTO,
    "mu": "0.0",
    "query_margin": AUTO,
    "alpha_max": AUTO,
    "beta_max": AUTO,
    "frontier_connectivity": "4",
    "stall_scans": "10",
    "sensing_range": "1.5",
    "beam_count": "360",
    "scan_rate": "10.0",
    "k_v": "1.0",
    "k_w": "2.0",
    "k_safety": "1.0",
    "k_s": "1.0",
    "v_max": "1.0",
    "w_max": "1.0",
    "dt": "0.1",
    "snapshot_milestones": "25,50,75,90",
}

_POSITIVE = ("replan_period", "scan_period", "robot_radius", "clearance", "sensing_range",
             "scan_rate", "k_v", "k_w", "k_safety", "k_s", "v_max", "w_max", "dt")


@dataclass(frozen=True)
class Combination:
    strategy: Strategy
    info_kind: InfoKind
    nav_kind: NavKind

    @property
    def label(self) -> str:
        return f"{self.strategy.value}/{self.info_kind.value}/{self.nav_kind.value}"

    @property
    def slug(self) -> str:
        return self.label.replace("/", "-")


@dataclass
class ExperimentSpec:
    world_path: Path
    poses: list
    combinations: list
    base: ExplorationConfig
    sensor: dict
    milestones: tuple
    values: dict = field(default_factory=dict)  # resolved flat key -> text

    def world(self):
        return read_world(self.world_path, **self.sensor)

    def config_for(self, combo: Combination) -> ExplorationConfig:
        return replace(self.base, strategy=combo.strategy, info_kind=combo.info_kind,
                       nav_kind=combo.nav_kind)


def parse_flat(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; later keys override earlier ones."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def parse_overrides(pairs) -> dict:
    out = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _number(key, text, kind=float):
    try:
        value = kind(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite")
    return value


def _world_path(name: str, base_dir) -> Path:
    if name in BUNDLED_POSES:
        return Path(str(resources.files("proexplore") / "data" / f"{name}.world"))
    path = Path(name)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    if not path.exists():
        raise ConfigError(f"world: file not found: {name}")
    return path.resolve()


def _parse_poses(text):
    poses = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) not in (2, 3):
            raise ConfigError(f"poses: expected 'x,y[,theta]', got {chunk!r}")
        vals = [_number("poses", p) for p in parts]
        poses.append(tuple(vals) if len(vals) == 3 else (vals[0], vals[1], 0.0))
    return poses


def _parse_combinations(text):
    combos = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split("/")]
        if len(parts) != 3:
            raise ConfigError(f"combinations: expected 'strategy/info/nav', got {chunk!r}")
        try:
            combos.append(Combination(Strategy.parse(parts[0]), InfoKind.parse(parts[1]),
                                      NavKind.parse(parts[2])))
        except ConfigError as exc:
            raise ConfigError(f"combinations: {exc}") from None
    return combos


def validate_config(text: str = "", overrides=None, base_dir=None) -> ExperimentSpec:
    """Resolve flat configuration text (plus overrides) into an :class:`ExperimentSpec`.

    Unknown keys and out-of-range values raise :class:`ConfigError` naming the key.
    """
    given = parse_flat(text)
    given.update(overrides or {})
    unknown = sorted(set(given) - set(DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown key(s): {', '.join(unknown)}")
    raw = dict(DEFAULTS)
    raw.update(given)

    num = {k: _number(k, raw[k]) for k in _POSITIVE}
    for k in _POSITIVE:
        if num[k] <= 0:
            raise ConfigError(f"{k}: must be positive (got {raw[k]})")
    beam_count = _number("beam_count", raw["beam_count"], int)
    if beam_count <= 0:
        raise ConfigError(f"beam_count: must be positive (got {raw['beam_count']})")
    connectivity = _number("frontier_connectivity", raw["frontier_connectivity"], int)
    if connectivity not in (4, 8):
        raise ConfigError("frontier_connectivity: must be 4 or 8")
    stall_scans = _number("stall_scans", raw["stall_scans"], int)
    if stall_scans < 0:
        raise ConfigError(f"stall_scans: must be non-negative (got {raw['stall_scans']})")
    mu = _number("mu", raw["mu"])
    if mu < 0:
        raise ConfigError(f"mu: must be non-negative (got {raw['mu']})")

    optional = {}
    for k in ("eta", "query_margin", "alpha_max", "beta_max"):
        if raw[k] == AUTO:
            optional[k] = None
            continue
        optional[k] = _number(k, raw[k])
        if optional[k] < 0 or (k != "query_margin" and optional[k] == 0):
            raise ConfigError(f"{k}: out of range (got {raw[k]})")
    budget = None
    if raw["step_budget"] != AUTO:
        budget = _number("step_budget", raw["step_budget"], int)
        if budget <= 0:
            raise ConfigError(f"step_budget: must be positive (got {raw['step_budget']})")

    milestones = []
    for part in raw["snapshot_milestones"].split(","):
        if part.strip():
            m = _number("snapshot_milestones", part.strip())
            if not 0 < m <= 100:
                raise ConfigError("snapshot_milestones: percentages must lie in (0, 100]")
            milestones.append(m)

    world_path = _world_path(raw["world"], base_dir)
    sensor = {"sensing_range": num["sensing_range"], "beam_count": beam_count,
              "scan_rate": num["scan_rate"]}
    try:
        world = read_world(world_path, **sensor)
    except WorldFormatError as exc:
        raise ConfigError(f"world: {exc}") from None

    if raw["poses"] == AUTO:
        if raw["world"] not in BUNDLED_POSES:
            raise ConfigError("poses: required for a non-bundled world")
        poses = list(BUNDLED_POSES[raw["world"]])
    else:
        poses = _parse_poses(raw["poses"])
    if not poses:
        raise ConfigError("poses: at least one pose is required")
    for p in poses:
        if not world.is_free(p[0], p[1]):
            raise ConfigError(f"poses: ({p[0]}, {p[1]}) is not in free space")

    if raw["combinations"] != AUTO and raw["strategy"] != AUTO:
        raise ConfigError("strategy: give either 'strategy' or 'combinations', not both")
    if raw["combinations"] != AUTO:
        combos = _parse_combinations(raw["combinations"])
    elif raw["strategy"] != AUTO:
        combos = _parse_combinations(f"{raw['strategy']}/{raw['info_kind']}/{raw['nav_kind']}")
    else:
        combos = _parse_combinations(DEFAULT_COMBINATIONS)
    if not combos:
        raise ConfigError("combinations: at least one combination is required")

    eta = optional["eta"]
    if eta is not None and not eta < num["sensing_range"]:
        raise ConfigError("eta: must be smaller than sensing_range")
    control = ControlParams(num["k_v"], num["k_w"], num["k_safety"], num["k_s"],
                            num["v_max"], num["w_max"], num["dt"])
    base = ExplorationConfig(
        replan_period=num["replan_period"], step_budget=budget, scan_period=num["scan_period"],
        robot_radius=num["robot_radius"], clearance=num["clearance"], visibility_tolerance=eta,
        info_threshold=mu, query_margin=optional["query_margin"],
        alpha_max=optional["alpha_max"], beta_max=optional["beta_max"],
        frontier_connectivity=connectivity, stall_scans=stall_scans, control=control)

    resolved = base.resolved(world)
    values = dict(raw)
    values.update({
        "world": str(world_path),
        "poses": "; ".join(",".join(_fmt(v) for v in p) for p in poses),
        "combinations": "; ".join(c.label for c in combos),
        "strategy": AUTO,
        "eta": _fmt(resolved.visibility_tolerance),
        "query_margin": _fmt(resolved.query_margin),
        "alpha_max": _fmt(resolved.alpha_max),
        "beta_max": _fmt(resolved.beta_max),
        "step_budget": str(resolved.step_budget),
    })
    return ExperimentSpec(world_path, poses, combos, base, sensor, tuple(milestones), values)


def dump_config(values: dict) -> str:
    return "".join(f"{k} = {values[k]}\n" for k in DEFAULTS)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.6f}"
    return str(value)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


METRICS_HEADER = ("tick", "time_s", "x_m", "y_m", "theta_rad", "s", "distance_traveled_m",
                  "mapping_pct", "n_frontier_regions", "event")
TRAJECTORY_HEADER = ("tick", "time_s", "x_m", "y_m", "theta_rad", "s", "v_mps", "w_radps",
                     "s_rate", "dist_to_unsafe_m")
REPLANS_HEADER = ("tick", "time_s", "start_x_m", "start_y_m", "region_id", "viewpoint_x_m",
                  "viewpoint_y_m", "path_length_m", "travel_cost")
SUMMARY_HEADER = ("combination", "pose", "outcome", "total_distance_m", "total_time_s",
                  "replan_count", "final_mapping_pct", "preventive_vs_persistent_distance_ratio")


def metrics_csv(record) -> str:
    return csv_text(METRICS_HEADER, ((t.tick, t.time_s, t.x, t.y, t.theta, t.s, t.distance,
                                      t.mapping_pct, t.n_regions, t.event) for t in record.ticks))


def trajectory_csv(record) -> str:
    return csv_text(TRAJECTORY_HEADER, ((t.tick, t.time_s, t.x, t.y, t.theta, t.s, t.v, t.w,
                                         t.s_rate, t.dist_to_unsafe) for t in record.ticks))


def replans_csv(record) -> str:
    return csv_text(REPLANS_HEADER, ((r.tick, r.time_s, r.start[0], r.start[1], r.region_id,
                                      r.viewpoint[0], r.viewpoint[1], r.path_length,
                                      r.travel_cost) for r in record.replans))


def grid_at_tick(known_tick, final_state, resolution, tick) -> OccupancyGrid:
    states = np.where(known_tick <= tick, final_state, UNKNOWN)
    return OccupancyGrid.from_states(states.astype(np.int8), resolution)


def write_run(run_dir: Path, record, values: dict, milestones=()):
    """Write every per-run artifact of ``record`` under ``run_dir``."""
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "metrics.csv").write_text(metrics_csv(record))
    (run_dir / "trajectory.csv").write_text(trajectory_csv(record))
    (run_dir / "replans.csv").write_text(replans_csv(record))
    (run_dir / "resolved.cfg").write_text(dump_config(values))
    (run_dir / "outcome.txt").write_text(f"{record.outcome.value}\n{record.message}\n")
    grid = record.final_grid
    np.savez_compressed(run_dir / "map_history.npz", known_tick=record.known_tick,
                        final_state=grid.state, resolution=np.array(grid.resolution))
    (run_dir / "final_map.pgm").write_text(pgm_text(grid))
    snaps = run_dir / "snapshots"
    for pct in milestones:
        tick = milestone_tick(record.ticks, pct)
        if tick is None:
            continue
        snaps.mkdir(exist_ok=True)
        g = grid_at_tick(record.known_tick, grid.state, grid.resolution, tick)
        (snaps / f"map_pct_{pct:g}.pgm").write_text(pgm_text(g))


def milestone_tick(ticks, pct):
    """First tick whose mapping percentage reaches ``pct`` (percent), or None."""
    for t in ticks:
        if t.mapping_pct * 100.0 >= pct - 1e-9:
            return t.tick
    return None


def _execute(task):
    run_dir, spec_values, world_path, sensor, cfg, pose, milestones = task
    world = read_world(world_path, **sensor)
    record = run(world, cfg, pose)
    write_run(Path(run_dir), record, spec_values, milestones)
    curve = np.array(record.map_curve, dtype=np.float64)
    return {
        "outcome": record.outcome.value,
        "distance": record.total_distance,
        "time": record.total_time,
        "replans": len(record.replans),
        "pct": record.final_mapping_pct,
        "curve": curve,
    }


def _run_values(spec: ExperimentSpec, combo: Combination, pose) -> dict:
    values = dict(spec.values)
    values["poses"] = ",".join(_fmt(v) for v in pose)
    values["combinations"] = combo.label
    return values


def mean_curve(curves, step: float = 0.1):
    """Mean mapping percentage over a common distance grid; runs hold their final value."""
    top = max(float(c[-1, 0]) for c in curves)
    grid = np.arange(0.0, top + step, step)
    stack = []
    for c in curves:
        d, p = c[:, 0], c[:, 1]
        idx = np.searchsorted(d, grid, side="right") - 1
        stack.append(p[np.clip(idx, 0, len(p) - 1)])
    return grid, np.mean(stack, axis=0)


@dataclass
class ExperimentResult:
    rows: list
    out_dir: Path

    @property
    def safety_violations(self) -> int:
        return sum(r[2] == Outcome.SAFETY_VIOLATION.value for r in self.rows)


def run_experiment(spec: ExperimentSpec, out_dir, jobs: int = 1) -> ExperimentResult:
    """Run every (combination, pose) pair and emit per-run and aggregate artifacts."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "resolved.cfg").write_text(dump_config(spec.values))
    tasks, keys = [], []
    for combo in spec.combinations:
        cfg = spec.config_for(combo)
        for k, pose in enumerate(spec.poses):
            run_dir = out_dir / "runs" / f"{combo.slug}__pose{k}"
            tasks.append((str(run_dir), _run_values(spec, combo, pose), str(spec.world_path),
                          spec.sensor, cfg, pose, spec.milestones))
            keys.append((combo, k))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, tasks))
    else:
        results = [_execute(t) for t in tasks]

    by_key = dict(zip(keys, results))
    rows = []
    for (combo, k), res in zip(keys, results):
        ratio = ""
        if combo.strategy is Strategy.PREVENTIVE:
            twin = by_key.get((Combination(Strategy.PERSISTENT, combo.info_kind, combo.nav_kind), k))
            if twin is not None and twin["distance"] > 0:
                ratio = res["distance"] / twin["distance"]
        rows.append((combo.label, k, res["outcome"], res["distance"], res["time"],
                     res["replans"], res["pct"], ratio))
    (out_dir / "summary.csv").write_text(csv_text(SUMMARY_HEADER, rows))

    curves_dir = out_dir / "curves"
    curves_dir.mkdir(exist_ok=True)
    for combo in spec.combinations:
        curves = [by_key[(combo, k)]["curve"] for k in range(len(spec.poses))]
        dist, pct = mean_curve(curves)
        (curves_dir / f"{combo.slug}.csv").write_text(
            csv_text(("distance_traveled_m", "mean_mapping_pct", "n_runs"),
                     ((d, p, len(curves)) for d, p in zip(dist, pct))))
    return ExperimentResult(rows, out_dir)


def snapshot(run_dir, pct: float, output=None) -> Path:
    """Re-emit the P2 map of ``run_dir`` at the first tick reaching ``pct`` percent."""
    run_dir = Path(run_dir)
    if pct <= 1.0:
        pct *= 100.0
    hist = np.load(run_dir / "map_history.npz")
    known, final, res = hist["known_tick"], hist["final_state"], float(hist["resolution"])
    tick = None
    with open(run_dir / "metrics.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            if float(row["mapping_pct"]) * 100.0 >= pct - 1e-9:
                tick = int(row["tick"])
                break
    if tick is None:
        raise ValueError(f"run never reached {pct:g}% mapped")
    grid = grid_at_tick(known, final, res, tick)
    out = Path(output) if output else run_dir / f"snapshot_pct_{pct:g}.pgm"
    out.write_text(pgm_text(grid))
    return out
