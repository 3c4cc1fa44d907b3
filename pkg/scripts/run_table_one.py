#!/usr/bin/env python3
"""End-to-end default experiment: simulate the stock campaign, fit the
six model/feature combinations, and print the comparison table plus
per-height curve files. Equivalent to `smol simulate` + `smol report`.
"""

import argparse
from pathlib import Path

from smol import cli


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="results", help="artifact directory")
    parser.add_argument("--seed", type=int, default=None, help="campaign seed override")
    parser.add_argument("--split-seed", type=int, default=0)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log = out / "campaign.csv"

    sim = ["simulate", "--out", str(log), "--dump-config", str(out / "campaign.json")]
    if args.seed is not None:
        sim += ["--seed", str(args.seed)]
    if cli.main(sim) != 0:
        raise SystemExit("simulation failed")

    code = cli.main(
        ["report", "--log", str(log), "--out-dir", str(out),
         "--split-seed", str(args.split_seed)]
    )
    raise SystemExit(code)


if __name__ == "__main__":
    main()
