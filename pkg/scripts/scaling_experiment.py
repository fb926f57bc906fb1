"""Energy-error CLT across dimension, plus the acceptance and efficiency curves.

    python3 scripts/scaling_experiment.py --dims 64,256,1024 --n 20000 --out results/scaling
"""

import argparse
import os

import numpy as np

from maltkit.cli import main, write_csv
from maltkit.scaling import acceptance_curve, efficiency_curve, optimal_ell, sigma_gaussian
from maltkit.svg import emit_svg_panels


def curves(out, gamma, T):
    sig = sigma_gaussian(gamma, T)
    rep = optimal_ell(sig)
    ell = np.linspace(0.05, 2.5 * rep.ell_star, 300)
    acc, eff = acceptance_curve(ell, sig), efficiency_curve(ell, sig)
    write_csv(os.path.join(out, "curves.csv"), "scaling", ["ell", "acceptance", "efficiency"], zip(ell, acc, eff),
              comments=[f"Sigma={sig:.17g}, ell_star={rep.ell_star:.17g}"])
    emit_svg_panels([
        {"curves": [("a(ell)", ell, acc)], "title": "limiting acceptance", "xlabel": "ell", "ylabel": "a"},
        {"curves": [("eff(ell)", ell, eff)], "title": "limiting efficiency", "xlabel": "ell", "ylabel": "eff"},
    ], os.path.join(out, "curves.svg"))


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--T", type=float, default=1.0)
    ap.add_argument("--dims", default="64,256,1024")
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--marginal", choices=("gaussian", "logcosh"), default="gaussian")
    ap.add_argument("--out", default="results/scaling")
    args = ap.parse_args(argv)
    code = main(["scaling", "--gamma", str(args.gamma), "--T", str(args.T), "--dims", args.dims, "--n", str(args.n),
                 "--seed", str(args.seed), "--marginal", args.marginal, "--plot", "--out", args.out])
    curves(args.out, args.gamma, args.T)
    return code


if __name__ == "__main__":
    raise SystemExit(run())
