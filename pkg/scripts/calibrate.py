"""Tune the MALT time-step to the 65.1% acceptance target on each preset.

    python3 scripts/calibrate.py --out results/tune
"""

import argparse
import os

from maltkit.cli import PRESETS, main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--T", type=float, default=1.6, help="integration time kept fixed while h moves")
    ap.add_argument("--out", default="results/tune")
    args = ap.parse_args(argv)
    worst = 0
    for name in PRESETS:
        print(f"== {name}")
        code = main(["tune", "--preset", name, "--T", str(args.T), "--seed", str(args.seed),
                     "--out", os.path.join(args.out, name)])
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    raise SystemExit(run())
