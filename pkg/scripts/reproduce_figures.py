"""Write every figure dataset (CSV per figure plus figures.json) to a directory.

    python3 scripts/reproduce_figures.py out/figures --step 0.01
"""

import argparse
import json
import os
import time

from netrisk import sweeps
from netrisk.config import SCHEMA_VERSION


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out")
    ap.add_argument("--step", default="0.01")
    ap.add_argument("--only", nargs="*", help="figure names such as fig3 fig8")
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    jobs = sweeps.figure_jobs(sweeps.FigureSettings(step=args.step))
    manifest = {}
    for name, group in jobs.items():
        if args.only and name not in args.only:
            continue
        t0 = time.perf_counter()
        rows = sweeps.figure_rows(group)
        sweeps.write_csv(os.path.join(args.out, f"{name}.csv"), rows)
        manifest[name] = sorted({j.label for j in group})
        print(f"{name}: {len(rows)} rows in {time.perf_counter() - t0:.1f} s")
    with open(os.path.join(args.out, "figures.json"), "w", encoding="utf-8") as fh:
        json.dump({"schema_version": SCHEMA_VERSION, "series": manifest}, fh, indent=2, sort_keys=True)
        fh.write("\n")


if __name__ == "__main__":
    main()
