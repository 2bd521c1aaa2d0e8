#!/usr/bin/env python3
"""Generate a mission suite and run the expert planner over it.

The expert is the solvability oracle, so this doubles as a simulator/planner
health check: MSR must print 100.0.

Usage: python scripts/expert_baseline.py --per-category 10 --out expert_report.json
"""

import argparse
import json
import time
from pathlib import Path

from chorebot.agent import QAMode
from chorebot.bench import run_benchmark
from chorebot.data import ExpertAgent, SUPPORTED_CATEGORIES, build_missions, save_missions


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--per-category", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", type=Path, default=Path("expert_report.json"))
    parser.add_argument("--missions-out", type=Path, default=None)
    args = parser.parse_args()

    t0 = time.time()
    missions = build_missions({c: args.per_category for c in SUPPORTED_CATEGORIES}, seed=args.seed)
    print(f"generated {len(missions)} missions in {time.time() - t0:.1f}s")
    if args.missions_out:
        save_missions(missions, args.missions_out)

    t1 = time.time()
    report, _ = run_benchmark(lambda m: ExpertAgent(m), missions, QAMode.NEVER, seed=args.seed)
    print(f"expert run in {time.time() - t1:.1f}s: MSR {report.msr} | NRA {report.nra}")
    args.out.write_text(json.dumps(report.to_json(), indent=1))
    for category, entry in report.per_category.items():
        print(f"  {category}: msr {entry['msr']} mean expert actions {entry['meanExpertActions']}")


if __name__ == "__main__":
    main()
