"""Run a report config and print one line per check.

    python3 scripts/run_report.py configs/golden.json [--out report.json]
"""

import argparse
import json
import sys
from pathlib import Path

from sdelaplace.experiments import run_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", type=Path)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    out, reports = run_report(json.loads(args.config.read_text()))
    for rep in reports:
        bad = [r.name for r in rep.records if not r.passed]
        status = "PASS" if not bad else "FAIL"
        print(f"{status}  {rep.name:28s} {len(rep.records):3d} records  {', '.join(bad)}")
    if args.out:
        args.out.write_text(json.dumps(out, indent=2, sort_keys=True))
    return 0 if out["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
