"""Command-line entry point: ``explore run | oracle | snapshot``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError


def _cmd_run(args) -> int:
    from .experiment import parse_overrides, run_experiment, validate_config

    spec_path = Path(args.spec)
    try:
        text = spec_path.read_text()
        spec = validate_config(text, parse_overrides(args.set), base_dir=spec_path.parent)
    except (OSError, ConfigError) as exc:
        print(f"explore: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out) if args.out else Path("explore_out") / spec_path.stem
    result = run_experiment(spec, out, jobs=args.jobs)
    for label, pose, outcome, dist, time_s, replans, pct, _ in result.rows:
        print(f"{label:32s} pose{pose}  {outcome:16s} {dist:9.2f} m {time_s:8.1f} s "
              f"{replans:4d} replans  {100 * pct:6.2f}% mapped")
    print(f"artifacts: {out}")
    if result.safety_violations:
        print(f"explore: {result.safety_violations} run(s) ended in SAFETY_VIOLATION", file=sys.stderr)
        return 2
    return 0


def _cmd_oracle(args) -> int:
    from .oracles import run_suites

    try:
        reports = run_suites(args.suite, trials=args.trials, seed=args.seed)
    except KeyError as exc:
        print(f"explore: {exc.args[0]}", file=sys.stderr)
        return 1
    for rep in reports:
        print(rep.line())
        for note in rep.notes[:5]:
            print(f"  mismatch: {note}")
    return 0 if all(r.ok for r in reports) else 1


def _cmd_snapshot(args) -> int:
    from .experiment import snapshot

    try:
        path = snapshot(args.run_dir, args.pct, args.output)
    except (OSError, ValueError) as exc:
        print(f"explore: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="explore", description="Frontier exploration simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment spec")
    p.add_argument("spec", help="flat key = value spec file")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--set", action="append", metavar="K=V", help="override a spec key")
    p.add_argument("--out", help="output directory (default explore_out/<spec name>)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("oracle", help="check fast kernels against brute-force oracles")
    p.add_argument("suite", help="distance, erosion, dijkstra, visibility or all")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("snapshot", help="re-emit a run's P2 map at a mapping percentage")
    p.add_argument("run_dir")
    p.add_argument("pct", type=float, help="percent (0-100) or fraction (0-1)")
    p.add_argument("--output", help="PGM path (default <run_dir>/snapshot_pct_<pct>.pgm)")
    p.set_defaults(func=_cmd_snapshot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) is not None and getattr(args, "jobs", 1) < 1:
        print("explore: --jobs must be at least 1", file=sys.stderr)
        return 1
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
