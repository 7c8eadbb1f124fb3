#!/usr/bin/env python3
"""Run every bundled reproduction experiment and print the check lines.

Usage:
    python scripts/run_reproductions.py [--json report.json]

Exit code 0 only if every gating check passes.
"""

import argparse
import json
import sys
import time

from fogassign.reproduce import EXPERIMENTS, format_report, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", help="also write a machine-readable report")
    parser.add_argument(
        "--only", nargs="*", choices=sorted(EXPERIMENTS), help="subset of experiments"
    )
    args = parser.parse_args()

    reports = []
    all_ok = True
    for eid in args.only or sorted(EXPERIMENTS):
        t0 = time.perf_counter()
        rep = run_experiment(eid)
        elapsed = time.perf_counter() - t0
        print(format_report(rep))
        print(f"  ({elapsed:.2f}s)\n")
        all_ok = all_ok and rep.passed
        reports.append(
            {
                "experiment": rep.experiment,
                "passed": rep.passed,
                "seconds": round(elapsed, 3),
                "checks": [
                    {
                        "name": c.name,
                        "reference": c.paper,
                        "computed": c.computed,
                        "tolerance": c.tolerance,
                        "passed": c.passed,
                        "gating": c.gating,
                    }
                    for c in rep.checks
                ],
                "notes": rep.notes,
            }
        )
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"passed": all_ok, "experiments": reports}, fh, indent=2, default=str)
        print(f"wrote {args.json}")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
