"""Command-line front end: single missions, benchmark campaigns, canned
scenario configs.

Exit codes: 0 success, 2 configuration or usage error (argparse uses the
same code), 3 mission abort. Output layout is ``<out>/<planner>/<seed>/``
for single runs with fixed file names (mission.csv, mission.json,
manifest.json); benchmark campaigns write one aggregate CSV per planner
plus a combined comparison CSV next to the manifest. The ``OAIPP_OUT``
environment variable overrides ``--out``. CSV bodies are byte-identical
across reruns of the same config and seed.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .config import (
    PLANNER_KINDS,
    Config,
    ConfigError,
    config_to_dict,
    load_config,
    save_config,
)
from .mission import MissionAbort, MissionLog, run_mission, run_trials
from .scenarios import SCENARIO_NAMES, scenario_config

_EXIT_OK = 0
_EXIT_CONFIG = 2
_EXIT_ABORT = 3


def _out_dir(args) -> str:
    return os.environ.get("OAIPP_OUT") or args.out


def _apply_overrides(cfg: Config, args) -> Config:
    cfg = copy.deepcopy(cfg)
    if getattr(args, "seed", None) is not None:
        cfg.mission.seed = args.seed
    if getattr(args, "planner", None) is not None:
        planner = args.planner
        if planner not in PLANNER_KINDS:
            raise ConfigError(
                f"unknown planner {planner!r}; valid names: "
                f"{', '.join(PLANNER_KINDS)}")
        cfg.mission.planner = planner
    return cfg


def _fmt(x) -> str:
    """Shortest round-trip decimal form; reruns produce identical bytes."""
    return repr(float(x))


def _write_mission_csv(path: str, log: MissionLog) -> None:
    lines = ["t,rse,trace"]
    for t, r, tr in log.samples:
        lines.append(f"{_fmt(t)},{_fmt(r)},{_fmt(tr)}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_mission_json(path: str, log: MissionLog) -> None:
    doc = {
        "samples": [[float(t), float(r), float(tr)] for t, r, tr in log.samples],
        "executed_poses": [[float(t)] + [float(c) for c in pose]
                           for t, pose in log.executed_poses],
        "planned_paths": [np.asarray(p, dtype=float).tolist()
                          for p in log.planned_paths],
        "detections_count": log.detections_count,
        "collision_count": float(log.collision_count),
        "aborted": log.aborted,
        "abort_reason": log.abort_reason,
        "elapsed": float(log.elapsed),
        "final_mean": np.asarray(log.final_mean, dtype=float).tolist(),
        "final_variance": np.asarray(log.final_variance, dtype=float).tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def _write_manifest(path: str, cfg: Config, artifacts, duration: float,
                    command: str, extra=None) -> None:
    doc = {
        "version": __version__,
        "command": command,
        "seed": cfg.mission.seed,
        "config": config_to_dict(cfg),
        "artifacts": sorted(artifacts),
        "duration_s": duration,
    }
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def cmd_run(args) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return _EXIT_CONFIG
    t0 = time.perf_counter()
    log = run_mission(cfg)
    run_dir = os.path.join(_out_dir(args), cfg.mission.planner,
                           str(cfg.mission.seed))
    os.makedirs(run_dir, exist_ok=True)
    csv_path = os.path.join(run_dir, "mission.csv")
    json_path = os.path.join(run_dir, "mission.json")
    _write_mission_csv(csv_path, log)
    _write_mission_json(json_path, log)
    manifest_path = os.path.join(run_dir, "manifest.json")
    _write_manifest(manifest_path, cfg,
                    [os.path.basename(csv_path), os.path.basename(json_path)],
                    time.perf_counter() - t0, "run",
                    extra={"aborted": log.aborted,
                           "abort_reason": log.abort_reason})
    if args.verbose:
        t, r, tr = log.samples[-1]
        print(f"planner={cfg.mission.planner} seed={cfg.mission.seed} "
              f"final rse={r:.4f} trace={tr:.4f} "
              f"({log.detections_count} detections)", file=sys.stderr)
    print(run_dir)
    if log.aborted:
        print(f"mission aborted: {log.abort_reason}", file=sys.stderr)
        return _EXIT_ABORT
    return _EXIT_OK


def _write_aggregate_csv(path: str, stats) -> None:
    lines = ["t,rse_mean,rse_std,trace_mean,trace_std"]
    for i, t in enumerate(stats.times):
        lines.append(",".join(_fmt(v) for v in (
            t, stats.rse_mean[i], stats.rse_std[i],
            stats.trace_mean[i], stats.trace_std[i])))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_comparison_csv(path: str, per_planner) -> None:
    planners = list(per_planner)
    header = ["t"]
    for p in planners:
        header += [f"{p}_rse_mean", f"{p}_rse_std"]
    times = per_planner[planners[0]].times
    lines = [",".join(header)]
    for i, t in enumerate(times):
        row = [_fmt(t)]
        for p in planners:
            s = per_planner[p]
            row += [_fmt(s.rse_mean[i]), _fmt(s.rse_std[i])]
        lines.append(",".join(row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_benchmark(args) -> int:
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        planners = ([p.strip() for chunk in args.planners
                     for p in chunk.split(",") if p.strip()]
                    if args.planners else list(PLANNER_KINDS))
        for p in planners:
            if p not in PLANNER_KINDS:
                raise ConfigError(f"unknown planner {p!r}; valid names: "
                                  f"{', '.join(PLANNER_KINDS)}")
        if args.trials < 1:
            raise ConfigError("--trials must be at least 1")
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return _EXIT_CONFIG
    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    per_planner = {}
    artifacts = []
    aborted = {}
    try:
        for planner in planners:
            c = copy.deepcopy(cfg)
            c.mission.planner = planner
            if args.verbose:
                print(f"running {args.trials} trials of {planner} ...",
                      file=sys.stderr)
            stats = run_trials(c, args.trials)
            per_planner[planner] = stats
            if stats.aborted_seeds:
                aborted[planner] = stats.aborted_seeds
                print(f"warning: {planner} aborted for seeds "
                      f"{stats.aborted_seeds} (excluded)", file=sys.stderr)
            name = f"aggregate_{planner}.csv"
            _write_aggregate_csv(os.path.join(out, name), stats)
            artifacts.append(name)
    except MissionAbort as e:
        print(f"mission aborted: {e}", file=sys.stderr)
        return _EXIT_ABORT
    _write_comparison_csv(os.path.join(out, "comparison.csv"), per_planner)
    artifacts.append("comparison.csv")
    _write_manifest(os.path.join(out, "manifest.json"), cfg, artifacts,
                    time.perf_counter() - t0, "benchmark",
                    extra={"planners": planners, "trials": args.trials,
                           "aborted_seeds": aborted})
    print(out)
    return _EXIT_OK


def cmd_scenario(args) -> int:
    try:
        cfg = scenario_config(args.name, density_count=args.count)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return _EXIT_CONFIG
    out = _out_dir(args)
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, f"{args.name}.json")
    save_config(cfg, path)
    print(path)
    return _EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oaipp",
        description="Informative path planning missions over a simulated "
                    "target-search field.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one mission and write its log")
    run.add_argument("--config", required=True, help="mission config (JSON)")
    run.add_argument("--out", default="runs", help="output directory root")
    run.add_argument("--seed", type=int, default=None, help="override seed")
    run.add_argument("--planner", default=None,
                     help=f"override planner ({', '.join(PLANNER_KINDS)})")
    run.add_argument("--verbose", action="store_true")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("benchmark",
                           help="run seeded trials per planner and aggregate")
    bench.add_argument("--config", required=True, help="mission config (JSON)")
    bench.add_argument("--out", default="runs", help="output directory root")
    bench.add_argument("--seed", type=int, default=None,
                       help="override starting seed")
    bench.add_argument("--planner", dest="planners", action="append",
                       default=None, metavar="NAME[,NAME...]",
                       help="planner(s) to benchmark; default all")
    bench.add_argument("--trials", type=int, default=25)
    bench.add_argument("--verbose", action="store_true")
    bench.set_defaults(func=cmd_benchmark, planner=None)

    scen = sub.add_parser("scenario", help="emit a canned scenario config")
    scen.add_argument("name", choices=SCENARIO_NAMES)
    scen.add_argument("--out", default=".", help="directory for the config")
    scen.add_argument("--count", type=int, default=10,
                      help="obstacle count for the density scenarios")
    scen.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
