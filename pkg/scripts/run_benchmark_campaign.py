#!/usr/bin/env python3
"""Benchmark campaign: seeded trials of each planner on the target-search
scenario, aggregated onto a common time grid.

Writes one aggregate CSV per planner plus a comparison CSV, and prints the
final mean RSE per planner. The informed planners dominate the runtime;
expect roughly ten seconds per adaptive trial on one core.
"""

import argparse
import csv
import os
import sys

from oaipp.mission import run_trials
from oaipp.scenarios import scenario_config


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0, help="base seed")
    ap.add_argument("--out", default="campaign_out")
    ap.add_argument("--planners", default="oaipp-adaptive,lawnmower,random",
                    help="comma-separated planner list")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    planners = [p.strip() for p in args.planners.split(",") if p.strip()]
    stats = {}
    for planner in planners:
        cfg = scenario_config("benchmark")
        cfg.mission.planner = planner
        cfg.mission.seed = args.seed
        print(f"running {args.trials} trials of {planner} ...", flush=True)
        stats[planner] = run_trials(cfg, args.trials)

    for planner, s in stats.items():
        path = os.path.join(args.out, f"aggregate_{planner}.csv")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "rse_mean", "rse_std", "trace_mean", "trace_std"])
            for i, t in enumerate(s.times):
                w.writerow([t, s.rse_mean[i], s.rse_std[i],
                            s.trace_mean[i], s.trace_std[i]])

    first = stats[planners[0]]
    with open(os.path.join(args.out, "comparison.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"{p}_rse_mean" for p in planners])
        for i, t in enumerate(first.times):
            w.writerow([t] + [stats[p].rse_mean[i] for p in planners])

    print(f"\n{'planner':20s} {'final RSE':>12s} {'std':>8s} {'aborted':>8s}")
    for planner, s in stats.items():
        print(f"{planner:20s} {s.rse_mean[-1]:12.4f} {s.rse_std[-1]:8.4f} "
              f"{len(s.aborted_seeds):8d}")
    print(f"\nwrote {args.out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
