"""Command-line harness: ``malt-kit <subcommand> [flags]``.

Every subcommand writes ``<out>/<subcommand>.csv`` (first line
``# malt-kit v<version> <subcommand>``) and, with ``--plot``, an SVG next to it.
Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

import numpy as np

from . import __version__
from .analytics import (ESS_CAP, ar_ess, langevin_acf, langevin_rate, rhmc_contraction_rate, rhmc_mean_acf,
                        rhmc_square_acf)
from .config import ConfigError, ExperimentConfig
from .couplings import langevin_coupled_run, rhmc_coupled_run
from .diagnostics import FUNCTION_BATTERY, calibrate_step_size, worst_ess
from .rng import RngStream
from .samplers import SamplerConfig, run_sampler
from .scaling import delta_clt_experiment, optimal_ell, sigma_gaussian, sigma_monte_carlo
from .svg import emit_svg, emit_svg_panels
from .targets import diagonal_gaussian, logcosh_marginal, make_target, standard_gaussian_marginal

SUBCOMMANDS = ("acf", "ess-curve", "table", "scaling", "coupling", "tune", "chain")

# rows: (sampler, L, gamma); for rhmc L is the mean number of steps (T = L h)
PRESETS = {
    "gaussian-d50": {"target": "gaussian", "d": 50, "h": 0.2,
                     "rows": [("malt", 8, 1.5), ("rhmc", 5, 0.0), ("hmc", 3, 0.0), ("mala", 1, 0.0)]},
    "mixture-d50": {"target": "mixture", "d": 50, "h": 0.2, "a_norm": 0.5,
                    "rows": [("malt", 8, 1.0), ("rhmc", 4, 0.0), ("hmc", 3, 0.0), ("mala", 1, 0.0)]},
    "student-k20-d50": {"target": "student", "d": 50, "h": 0.2, "dof": 20.0,
                        "rows": [("malt", 8, 1.0), ("rhmc", 5, 0.0), ("hmc", 3, 0.0), ("mala", 1, 0.0)]},
}


class NumericalFailure(RuntimeError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path: str, subcommand: str, header: List[str], rows, comments=()):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# malt-kit v{__version__} {subcommand}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")
        for line in comments:
            fh.write(f"# {line}\n")
    return path


def parse_floats(text: Optional[str], name: str) -> List[float]:
    if text is None:
        return []
    try:
        return [float(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated numbers, got {text!r}") from None


def parse_ints(text: Optional[str], name: str) -> List[int]:
    if text is None:
        return []
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected comma-separated integers, got {text!r}") from None


def _out_path(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _preset(name: str) -> dict:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def _single(values: List[float], name: str, default=None):
    if not values:
        return default
    if len(values) > 1:
        raise ConfigError(f"{name}: expected a single value, got {len(values)}")
    return values[0]


def build_config(args, sampler: Optional[str] = None) -> ExperimentConfig:
    """Defaults < preset < config file < flags."""
    data = {}
    if getattr(args, "preset", None):
        p = _preset(args.preset)
        data.update({k: v for k, v in p.items() if k != "rows"})
        pick = sampler or getattr(args, "sampler", None) or "malt"
        for name, L, gamma in p["rows"]:
            if name == pick:
                data.update({"sampler": name, "L": L, "gamma": gamma})
                break
    if getattr(args, "config", None):
        file_cfg = ExperimentConfig.load(args.config)
        data.update({k: v for k, v in file_cfg.to_dict().items() if k not in ("out",)})
    flags = {
        "seed": args.seed, "threads": args.threads, "n_samples": args.n, "h": args.h, "T": args.T, "L": args.L,
        "gamma": _single(parse_floats(args.gamma, "gamma"), "gamma"),
        "alpha": _single(parse_floats(args.alpha, "alpha"), "alpha"),
        "sampler": sampler or getattr(args, "sampler", None),
        "zero_policy": getattr(args, "rhmc_zero_policy", None),
        "iac_method": getattr(args, "iac_method", None),
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    if data.get("T") is not None and args.L is None and "L" in data and args.T is not None:
        data.pop("L")
    if data.get("T") is None and data.get("L") is None:
        data["T"] = data.get("h", 0.2)
    data["out"] = args.out
    return ExperimentConfig.from_dict(data)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_acf(args) -> int:
    gammas = parse_floats(args.gamma, "gamma") or [0.0, 0.5, 1.0, 2.0, 4.0]
    sigmas = parse_floats(args.sigma, "sigma") or [1.0]
    if any(s <= 0 for s in sigmas):
        raise ConfigError("sigma: scales must be positive")
    if any(g < 0 for g in gammas):
        raise ConfigError("gamma: must be >= 0")
    if not args.tmax > 0 or args.npts < 2:
        raise ConfigError("tmax: must be positive (and npts >= 2)")
    times = np.linspace(0.0, args.tmax, args.npts)
    rows, curves = [], []
    for s in sigmas:
        for g in gammas:
            vals = [langevin_acf(s, g, t) for t in times]
            rows += [(s, g, t, r) for t, r in zip(times, vals)]
            curves.append((f"sigma={s:g} gamma={g:g}", times, vals))
    write_csv(_out_path(args, "acf.csv"), "acf", ["sigma", "gamma", "T", "rho"], rows)
    if args.plot:
        emit_svg(curves, _out_path(args, "acf.svg"), "Langevin ACF", "T", "rho")
    return 0


def _analytic_ess_curves(scales, gamma, times):
    out = []
    for t in times:
        lang = np.array([langevin_acf(s, gamma, t) for s in scales])
        ham = np.cos(t / scales)
        r = np.array([rhmc_mean_acf(s, t) for s in scales])
        sq = np.array([rhmc_square_acf(s, t) for s in scales])
        ideal = math.cos(t)
        cells = {
            ("malt", "x"): lang.max(), ("malt", "x^2"): (lang**2).max(),
            ("rhmc", "x"): r.max(), ("rhmc", "x^2"): sq.max(),
            ("hmc", "x"): ham.max(), ("hmc", "x^2"): (ham**2).max(),
            ("ideal-hmc", "x"): ideal, ("ideal-hmc", "x^2"): ideal**2,
        }
        for (name, f), rho in cells.items():
            out.append((t, name, f, min(ar_ess(float(np.clip(rho, -1, 1)), t), ESS_CAP)))
    return out


def cmd_ess_curve(args) -> int:
    preset = _preset(args.preset or "gaussian-d50")
    cfg = build_config(args, "malt") if args.preset else None
    target = make_target(preset["target"], preset["d"], preset.get("a_norm", 0.5), preset.get("dof", 20.0))
    if preset["target"] == "gaussian":
        gamma = _single(parse_floats(args.gamma, "gamma"), "gamma", 2.0 / target.scales.max())
        times = np.linspace(args.tmax / args.npts, args.tmax, args.npts)
        rows = _analytic_ess_curves(target.scales, gamma, times)
        write_csv(_out_path(args, "ess-curve.csv"), "ess-curve", ["T", "sampler", "f", "ess"], rows)
        xlab = "T"
    else:
        Ls = parse_ints(args.Ls, "Ls") or [1, 2, 3, 4, 5, 6, 8, 10, 12]
        n = cfg.n_samples if args.n is not None else 10000
        h = preset["h"]
        malt_gamma = [g for s, _, g in preset["rows"] if s == "malt"][0]
        iso = make_target(preset["target"], preset["d"], preset.get("a_norm", 0.5), preset.get("dof", 20.0),
                          scales=np.ones(preset["d"]))
        jobs = []
        for L in Ls:
            jobs += [("malt", target, L, malt_gamma), ("rhmc", target, L, 0.0), ("hmc", target, L, 0.0),
                     ("ideal-hmc", iso, L, 0.0)]
        streams = RngStream(args.seed).split(len(jobs))
        rows = []
        funcs = {"x": FUNCTION_BATTERY["x"], "x^2": FUNCTION_BATTERY["x^2"]}
        for (name, tgt, L, g), st in zip(jobs, streams):
            sc = SamplerConfig(h=h, L=L, gamma=g, n_samples=n, seed=args.seed)
            res = run_sampler("hmc" if name == "ideal-hmc" else name, tgt, sc, st)
            rep = worst_ess(res, funcs)
            rows += [(L, name, f, rep.worst[f]) for f in funcs]
        write_csv(_out_path(args, "ess-curve.csv"), "ess-curve", ["L", "sampler", "f", "ess"], rows)
        xlab = "L"
    if args.plot:
        panels = []
        for f, title in (("x", "mean"), ("x^2", "variance")):
            curves = []
            for name in ("ideal-hmc", "malt", "rhmc", "hmc"):
                pts = [(r[0], r[3]) for r in rows if r[1] == name and r[2] == f]
                curves.append((name, [p[0] for p in pts], [min(p[1], 2.0) for p in pts]))
            panels.append({"curves": curves, "title": f"worst ESS, {title}", "xlabel": xlab, "ylabel": "ESS"})
        emit_svg_panels(panels, _out_path(args, "ess-curve.svg"))
    return 0


def _table_row(job):
    name, L, gamma, h, n, kind, d, a_norm, dof, seed, stream_id, method = job
    target = make_target(kind, d, a_norm, dof)
    cfg = SamplerConfig(h=h, L=L, gamma=gamma, n_samples=n, seed=seed)
    res = run_sampler(name, target, cfg, RngStream(seed, stream_id))
    rep = worst_ess(res, method=method)
    return [name, L, res.acceptance_rate] + rep.row(list(FUNCTION_BATTERY))


def table_jobs(preset_name: str, n: int, seed: int, method: str = "geyer"):
    p = _preset(preset_name)
    base = RngStream(seed)
    ids = [s.stream_id for s in base.split(len(p["rows"]))]
    return [(name, L, gamma, p["h"], n, p["target"], p["d"], p.get("a_norm", 0.5), p.get("dof", 20.0), seed, sid,
             method) for (name, L, gamma), sid in zip(p["rows"], ids)]


def cmd_table(args) -> int:
    cfg = build_config(args)
    jobs = table_jobs(args.preset or "gaussian-d50", cfg.n_samples if args.n is not None else 100000, cfg.seed,
                      cfg.iac_method)
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(_table_row, jobs))
    else:
        rows = [_table_row(j) for j in jobs]
    header = ["sampler", "L", "acceptance"] + list(FUNCTION_BATTERY)
    write_csv(_out_path(args, "table.csv"), "table", header, rows)
    for r in rows:
        print(f"{r[0]:>5} L={r[1]:<2} acc={r[2]:.3f} " + " ".join(f"{v:.3f}" for v in r[3:]))
    if not all(math.isfinite(v) for r in rows for v in r[2:]):
        raise NumericalFailure("non-finite ESS or acceptance in table")
    return 0


def cmd_scaling(args) -> int:
    gamma = _single(parse_floats(args.gamma, "gamma"), "gamma", 2.0)
    T = 1.0 if args.T is None else args.T
    if gamma < 0 or not T > 0:
        raise ConfigError("gamma/T: need gamma >= 0 and T > 0")
    dims = parse_ints(args.dims, "dims") or [64, 256, 1024]
    n = args.n or 20000
    stream = RngStream(args.seed)
    if args.marginal == "gaussian":
        marginal = standard_gaussian_marginal()
        sig = sigma_gaussian(gamma, T)
    else:
        marginal = logcosh_marginal(0.5)
        sig, _ = sigma_monte_carlo(marginal, gamma, T, 20000, 0.01, stream.spawn_one())
    if not sig > 0:
        raise NumericalFailure(f"Sigma = {sig}: optimal step is not finite")
    rep = optimal_ell(sig)
    ell = rep.ell_star if args.ell is None else args.ell
    stats = delta_clt_experiment(marginal, gamma, T, ell, dims, n, stream)
    rows = [(s.d, s.h, s.mean_delta, s.var_delta, s.acceptance) for s in stats]
    report = f"ell_star={rep.ell_star:.17g}, acc_star={rep.acc_star:.17g}, eff_star={rep.eff_star:.17g}"
    write_csv(_out_path(args, "scaling.csv"), "scaling", ["d", "h", "mean_delta", "var_delta", "acceptance"], rows,
              comments=[f"Sigma={sig:.17g}, ell={ell:.17g}", "report " + report])
    print(report)
    if args.plot:
        ds = [s.d for s in stats]
        emit_svg([("acceptance", ds, [s.acceptance for s in stats]), ("a(ell)", ds, [rep.acc_star] * len(ds))],
                 _out_path(args, "scaling.svg"), "acceptance vs dimension", "d", "acceptance")
    if not all(math.isfinite(v) for r in rows for v in r):
        raise NumericalFailure("non-finite energy error statistics")
    return 0


def cmd_coupling(args) -> int:
    sigma = _single(parse_floats(args.sigma, "sigma"), "sigma", 1.0)
    target = diagonal_gaussian([sigma])
    m, M = target.convexity_bounds
    duration = args.duration
    pairs = args.pairs
    stream = RngStream(args.seed)
    summary, curves = [], []
    if args.kind == "rhmc":
        params = parse_floats(args.alpha, "alpha") or [0.0, 0.5, 0.9]
        streams = stream.split(len(params))
        for a, st in zip(params, streams):
            if not 0 <= a < 1:
                raise ConfigError("alpha: must lie in [0, 1)")
            tr = rhmc_coupled_run(target, a, duration, pairs, st)
            r = rhmc_contraction_rate(m, M, a).r
            summary.append(("rhmc", a, r, tr.fitted_slope, -2 * r))
            write_csv(_out_path(args, f"coupling_rhmc_alpha{a:g}.csv"), "coupling", ["t", "mean_twisted_norm_sq"],
                      zip(tr.times, tr.twisted_norm_sq), comments=[f"fitted_slope={tr.fitted_slope:.17g}"])
            curves.append((f"alpha={a:g}", tr.times, np.log(tr.twisted_norm_sq)))
    else:
        params = parse_floats(args.gamma, "gamma") or [math.sqrt(2.0)]
        streams = stream.split(len(params))
        for g, st in zip(params, streams):
            tr = langevin_coupled_run(target, g, duration, pairs, st)
            r = langevin_rate(m, M, g)
            summary.append(("langevin", g, r, tr.fitted_slope, -2 * r))
            write_csv(_out_path(args, f"coupling_langevin_gamma{g:g}.csv"), "coupling",
                      ["t", "mean_twisted_norm_sq"], zip(tr.times, tr.twisted_norm_sq),
                      comments=[f"fitted_slope={tr.fitted_slope:.17g}"])
            curves.append((f"gamma={g:g}", tr.times, np.log(tr.twisted_norm_sq)))
    write_csv(_out_path(args, "coupling.csv"), "coupling", ["kind", "param", "rate", "fitted_slope", "bound_slope"],
              summary)
    for row in summary:
        print(f"{row[0]} param={row[1]:g} fitted_slope={row[3]:.4f} bound_slope={row[4]:.4f}")
    if args.plot:
        emit_svg(curves, _out_path(args, "coupling.svg"), "log mean twisted norm", "t", "log E|Z-Z'|_A^2")
    if not all(math.isfinite(r[3]) for r in summary):
        raise NumericalFailure("slope fit failed")
    return 0


def cmd_tune(args) -> int:
    cfg = build_config(args)
    target = cfg.build_target()
    sc = cfg.sampler_config()
    cal = calibrate_step_size(target, cfg.sampler, sc, args.target_accept, RngStream(cfg.seed))
    write_csv(_out_path(args, "tune.csv"), "tune", ["h", "acceptance", "converged"],
              [(cal.h, cal.acceptance, cal.converged)])
    print(f"h={cal.h:.6g} acceptance={cal.acceptance:.4f} converged={cal.converged}")
    if not cal.converged:
        raise NumericalFailure("step-size calibration did not converge")
    return 0


def cmd_chain(args) -> int:
    cfg = build_config(args)
    target = cfg.build_target()
    res = run_sampler(cfg.sampler, target, cfg.sampler_config(), RngStream(cfg.seed))
    keep = parse_ints(args.keep_coords, "keep-coords") or list(range(1, target.dim + 1))
    if any(not 1 <= k <= target.dim for k in keep):
        raise ConfigError(f"keep-coords: indices must lie in 1..{target.dim}")
    header = ["iter", "accepted", "delta"] + [f"x_{k}" for k in keep]
    cols = np.array(keep) - 1
    rows = ((i, res.accepted[i], res.deltas[i], *res.positions[i, cols]) for i in range(res.n_samples))
    write_csv(_out_path(args, "chain.csv"), "chain", header, rows,
              comments=[f"acceptance={res.acceptance_rate:.17g}, gradient_evals={res.total_gradient_evals}"])
    if args.plot:
        it = np.arange(res.n_samples)
        emit_svg([(f"x_{keep[0]}", it, res.positions[:, cols[0]])], _out_path(args, "chain.svg"), "trace",
                 "iteration", "x")
    if not np.all(np.isfinite(res.positions)):
        raise NumericalFailure("chain diverged")
    return 0


COMMANDS = {"acf": cmd_acf, "ess-curve": cmd_ess_curve, "table": cmd_table, "scaling": cmd_scaling,
            "coupling": cmd_coupling, "tune": cmd_tune, "chain": cmd_chain}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default=".")
    common.add_argument("--plot", action="store_true")
    common.add_argument("--n", type=int)
    common.add_argument("--h", type=float)
    common.add_argument("--T", type=float)
    common.add_argument("--L", type=int)
    common.add_argument("--gamma")
    common.add_argument("--alpha")
    common.add_argument("--preset")
    common.add_argument("--config")

    parser = _Parser(prog="malt-kit", description="MALT, HMC variants and their analytic checks")
    parser.add_argument("--version", action="version", version=f"malt-kit {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("acf", parents=[common], help="closed-form Langevin ACF curves")
    p.add_argument("--sigma")
    p.add_argument("--tmax", type=float, default=12.0)
    p.add_argument("--npts", type=int, default=241)

    p = sub.add_parser("ess-curve", parents=[common], help="worst ESS against integration time")
    p.add_argument("--tmax", type=float, default=5.0)
    p.add_argument("--npts", type=int, default=200)
    p.add_argument("--Ls")

    p = sub.add_parser("table", parents=[common], help="worst ESS per gradient for the function battery")
    p.add_argument("--iac-method", choices=("geyer", "truncated"))

    p = sub.add_parser("scaling", parents=[common], help="energy-error CLT against dimension")
    p.add_argument("--dims")
    p.add_argument("--ell", type=float)
    p.add_argument("--marginal", choices=("gaussian", "logcosh"), default="gaussian")

    p = sub.add_parser("coupling", parents=[common], help="synchronous coupling contraction traces")
    p.add_argument("--kind", choices=("rhmc", "langevin"), default="rhmc")
    p.add_argument("--sigma")
    p.add_argument("--duration", type=float, default=5.0)
    p.add_argument("--pairs", type=int, default=1000)

    p = sub.add_parser("tune", parents=[common], help="calibrate the time-step to a target acceptance")
    p.add_argument("--sampler", choices=("malt", "ghmc", "hmc", "mala", "rhmc"))
    p.add_argument("--target-accept", type=float, default=0.651)
    p.add_argument("--rhmc-zero-policy", choices=("clamp", "resample"))

    p = sub.add_parser("chain", parents=[common], help="run one chain and dump it")
    p.add_argument("--sampler", choices=("malt", "ghmc", "hmc", "mala", "rhmc"))
    p.add_argument("--keep-coords")
    p.add_argument("--rhmc-zero-policy", choices=("clamp", "resample"))
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] in ("-h", "--help", "--version"):
            try:
                parser.parse_args(argv)
            except SystemExit as exc:
                return int(exc.code or 0)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"malt-kit: expected a subcommand: {', '.join(SUBCOMMANDS)}", file=sys.stderr)
        return 1
    try:
        args = parser.parse_args(argv)
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("seed: must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("threads: must be >= 1")
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"malt-kit: config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"malt-kit: numerical failure: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help inside a subcommand
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
