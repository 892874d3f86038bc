"""Run a decay-rate sweep plan and write per-row and per-time CSV files.

    python3 scripts/run_sweep.py plans/weighted_oseen.json --out results/weighted_oseen
"""

import argparse
import json
from pathlib import Path

from oseenlab.rates import load_plan, sweep


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("plan", type=Path)
    p.add_argument("--out", type=Path, default=None, help="output directory (default results/<plan stem>)")
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()

    out = args.out or Path("results") / args.plan.stem
    out.mkdir(parents=True, exist_ok=True)
    res = sweep(load_plan(args.plan), workers=args.workers)
    (out / "rows.csv").write_text(res.to_csv())
    (out / "series.csv").write_text(res.series_csv())
    (out / "summary.json").write_text(json.dumps(res.summary(), indent=2, default=str))
    for row in res.rows:
        slope = "-" if row.fit is None else f"{row.fit.slope:+.3f}"
        print(f"{row.name:32s} {row.status:14s} slope {slope}  predicted {row.predicted}")
    print(f"{res.pass_count} pass, {res.fail_count} fail -> {out}")


if __name__ == "__main__":
    main()
