"""Worst ESS per gradient tables for the Gaussian, mixture and Student presets.

    python3 scripts/reproduce_tables.py --n 100000 --seed 7 --out results/tables

Each preset writes <out>/<preset>/table.csv. At the default N = 1e5 a preset
takes one to two minutes on one core; --threads fans the samplers out.
"""

import argparse
import os

from maltkit.cli import PRESETS, main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="results/tables")
    ap.add_argument("--presets", default=",".join(PRESETS))
    args = ap.parse_args(argv)
    for name in args.presets.split(","):
        print(f"== {name}")
        code = main(["table", "--preset", name, "--n", str(args.n), "--seed", str(args.seed),
                     "--threads", str(args.threads), "--out", os.path.join(args.out, name)])
        if code:
            return code
    return 0


if __name__ == "__main__":
    raise SystemExit(run())
