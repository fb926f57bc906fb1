"""Worst ESS curves: analytic against integration time for the Gaussian preset,
empirical against trajectory length for the mixture and Student presets.

    python3 scripts/ess_figures.py --n 20000 --out results/ess
"""

import argparse
import os

from maltkit.cli import main


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000, help="chain length per point (empirical presets)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--Ls", default="1,2,3,4,5,6,8,10,12")
    ap.add_argument("--out", default="results/ess")
    args = ap.parse_args(argv)
    code = main(["ess-curve", "--preset", "gaussian-d50", "--tmax", "5", "--npts", "250", "--plot",
                 "--out", os.path.join(args.out, "gaussian-d50")])
    for name in ("mixture-d50", "student-k20-d50"):
        print(f"== {name}")
        code = code or main(["ess-curve", "--preset", name, "--n", str(args.n), "--seed", str(args.seed),
                             "--Ls", args.Ls, "--plot", "--out", os.path.join(args.out, name)])
    return code


if __name__ == "__main__":
    raise SystemExit(run())
