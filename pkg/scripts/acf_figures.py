"""Closed-form ACF curves: fixed scale with varying friction, and fixed friction with varying scale.

    python3 scripts/acf_figures.py --out results/acf
"""

import argparse
import os

import numpy as np

from maltkit.analytics import hamiltonian_acf, langevin_acf
from maltkit.cli import main, write_csv
from maltkit.svg import emit_svg_panels


def scale_panels(out, tmax=12.0, npts=481):
    times = np.linspace(0, tmax, npts)
    scales = [0.25, 0.5, 1.0, 2.0, 4.0]
    rows, panels = [], []
    for gamma, title in ((0.0, "Hamiltonian"), (2.0, "Langevin, gamma = 2")):
        curves = []
        for s in scales:
            vals = [hamiltonian_acf(s, t) if gamma == 0 else langevin_acf(s, gamma, t) for t in times]
            curves.append((f"sigma={s:g}", times, vals))
            rows += [(s, gamma, t, v) for t, v in zip(times, vals)]
        panels.append({"curves": curves, "title": title, "xlabel": "T", "ylabel": "rho"})
    write_csv(os.path.join(out, "acf_scales.csv"), "acf", ["sigma", "gamma", "T", "rho"], rows)
    emit_svg_panels(panels, os.path.join(out, "acf_scales.svg"))


def run(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/acf")
    args = ap.parse_args(argv)
    code = main(["acf", "--gamma", "0,0.5,1,2,3,4", "--sigma", "1", "--tmax", "12", "--out", args.out, "--plot"])
    os.makedirs(args.out, exist_ok=True)
    scale_panels(args.out)
    print(f"wrote {args.out}/acf.csv, acf.svg, acf_scales.csv, acf_scales.svg")
    return code


if __name__ == "__main__":
    raise SystemExit(run())
