"""Autocorrelation, integrated autocorrelation, worst-coordinate ESS and step-size tuning."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy import fft as sfft

from .analytics import ESS_CAP, AcfCurve
from .rng import RngStream

IAC_FLOOR = 1e-8


class ZeroVarianceError(ValueError):
    pass


@dataclass
class IacEstimate:
    value: float
    truncation_lag: int
    method: str


@dataclass
class EssReport:
    """ESS per gradient evaluation per (function, coordinate) and its minimum over coordinates."""

    per_coordinate: Dict[str, np.ndarray]
    worst: Dict[str, float]
    meta: dict = field(default_factory=dict)

    def row(self, names=None):
        names = list(self.worst) if names is None else names
        return [self.worst[k] for k in names]


def _sgn(x):
    return np.sign(x)  # sign(0) = 0


FUNCTION_BATTERY: Dict[str, Callable] = {
    "x": lambda x: x,
    "x^3": lambda x: x**3,
    "sgn": _sgn,
    "sin": np.sin,
    "x^2": lambda x: x**2,
    "x^4": lambda x: x**4,
    "exp(-|x|)": lambda x: np.exp(-np.abs(x)),
    "cos": np.cos,
}
ODD = ("x", "x^3", "sgn", "sin")
EVEN = ("x^2", "x^4", "exp(-|x|)", "cos")


def autocorrelation(series: np.ndarray, max_lag: Optional[int] = None) -> np.ndarray:
    """Biased ACF along axis 0, computed by FFT. Works on (n,) or (n, k) arrays."""
    x = np.asarray(series, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("series needs at least two points")
    x = x - x.mean(axis=0)
    var = np.sum(x * x, axis=0)
    if np.any(var <= 0):
        raise ZeroVarianceError("zero variance")
    size = sfft.next_fast_len(2 * n)
    fx = sfft.rfft(x, size, axis=0)
    acov = sfft.irfft(fx * np.conj(fx), size, axis=0)[:n]
    acf = acov / var
    if max_lag is not None:
        acf = acf[: max_lag + 1]
    return acf


def empirical_acf(series, max_lag: int) -> AcfCurve:
    rho = autocorrelation(series, max_lag)
    return AcfCurve(np.arange(rho.shape[0]), rho, "empirical")


def _geyer_from_acf(rho: np.ndarray):
    n = rho.size
    npairs = n // 2
    gam = rho[: 2 * npairs : 2] + rho[1 : 2 * npairs : 2]
    total = gam[0]
    k = 1
    prev = gam[0]
    while k < npairs:
        g = gam[k]
        if g <= 0 or g > prev:
            break
        total += g
        prev = g
        k += 1
    return max(-1.0 + 2.0 * total, IAC_FLOOR), 2 * k - 1


def _sokal_from_acf(rho: np.ndarray, c: float = 5.0):
    tau = 1.0
    for m in range(1, rho.size):
        tau += 2.0 * rho[m]
        # the window is never shorter than c lags, so anticorrelated chains (tau < 1) do not stop at lag 1
        if m >= c * max(tau, 1.0):
            return max(tau, IAC_FLOOR), m
    return max(tau, IAC_FLOOR), rho.size - 1


def iac_geyer(series) -> IacEstimate:
    """Initial monotone positive sequence estimator on pair sums rho_2k + rho_2k+1."""
    value, lag = _geyer_from_acf(autocorrelation(series))
    return IacEstimate(float(value), int(lag), "geyer")


def iac_truncated(series, c: float = 5.0) -> IacEstimate:
    """Self-consistent window: stop at the first lag m >= c * tau(m)."""
    value, lag = _sokal_from_acf(autocorrelation(series), c)
    return IacEstimate(float(value), int(lag), "truncated")


IAC_METHODS = {"geyer": _geyer_from_acf, "truncated": _sokal_from_acf}


def iac_columns(matrix, method: str = "geyer") -> np.ndarray:
    """IAC of every column of an (n, k) array."""
    est = IAC_METHODS[method]
    rho = autocorrelation(matrix)
    if rho.ndim == 1:
        return np.array([est(rho)[0]])
    return np.array([est(rho[:, j])[0] for j in range(rho.shape[1])])


def ess_per_gradient(iac, L: float, h: float) -> float:
    """(pi/2) / (L h IAC): equals 1 for independent draws at integration time pi/2."""
    value = iac.value if isinstance(iac, IacEstimate) else float(iac)
    if not value > 0:
        raise ValueError("IAC must be positive")
    return min((math.pi / 2) / (L * h * value), ESS_CAP)


def worst_ess(chain, functions: Optional[Dict[str, Callable]] = None, L: Optional[float] = None,
              h: Optional[float] = None, method: str = "geyer") -> EssReport:
    """Apply each function coordinatewise and report the smallest ESS per gradient.

    ``L`` defaults to the chain's mean number of steps per iteration, which is
    the right cost for randomized trajectory lengths.
    """
    positions = chain.positions if hasattr(chain, "positions") else np.asarray(chain)
    if L is None:
        L = chain.mean_steps
    if h is None:
        h = chain.h
    functions = FUNCTION_BATTERY if functions is None else functions
    per, worst = {}, {}
    for name, f in functions.items():
        iacs = iac_columns(f(positions), method)
        ess = np.minimum((math.pi / 2) / (L * h * iacs), ESS_CAP)
        per[name] = ess
        worst[name] = float(ess.min())
    meta = {"L": L, "h": h, "N": positions.shape[0], "sampler": getattr(chain, "sampler", ""), "method": method}
    return EssReport(per, worst, meta)


# ---------------------------------------------------------------------------
# Stationarity checks
# ---------------------------------------------------------------------------

@dataclass
class MomentTest:
    z_mean: np.ndarray
    z_var: np.ndarray
    threshold: float = 4.0

    @property
    def passed_per_coordinate(self) -> np.ndarray:
        return (np.abs(self.z_mean) < self.threshold) & (np.abs(self.z_var) < self.threshold)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.passed_per_coordinate))


def moment_stationarity_test(chain, mean, variance, threshold: float = 4.0) -> MomentTest:
    """z-scores of the sample mean and variance with IAC-inflated standard errors."""
    x = chain.positions if hasattr(chain, "positions") else np.asarray(chain)
    n = x.shape[0]
    mean = np.broadcast_to(np.asarray(mean, dtype=float), x.shape[1:])
    variance = np.broadcast_to(np.asarray(variance, dtype=float), x.shape[1:])
    iac_x = iac_columns(x)
    z_mean = (x.mean(axis=0) - mean) / np.sqrt(x.var(axis=0) * iac_x / n)
    sq = (x - mean) ** 2
    iac_sq = iac_columns(sq)
    z_var = (sq.mean(axis=0) - variance) / np.sqrt(sq.var(axis=0) * iac_sq / n)
    return MomentTest(z_mean, z_var, threshold)


# ---------------------------------------------------------------------------
# Step-size calibration
# ---------------------------------------------------------------------------

@dataclass
class Calibration:
    h: float
    acceptance: float
    converged: bool
    history: np.ndarray


def calibrate_step_size(target, sampler: str, config_template, target_accept: float = 0.651,
                        stream: Optional[RngStream] = None, batch: int = 100, window: int = 2000,
                        tolerance: float = 0.02, max_batches: int = 400, kappa: float = 1.0) -> Calibration:
    """Robbins-Monro on log h until the acceptance over a window is within tolerance.

    The integration time of ``config_template`` is kept and L = floor(T/h) is
    recomputed for every trial step. Each round adapts for ``window / batch``
    batches and then measures the acceptance over a fresh window at the
    frozen step.
    """
    from .samplers import SamplerConfig, run_sampler

    if not 0 < target_accept < 1:
        raise ValueError("target_accept must lie in (0, 1)")
    stream = RngStream(config_template.seed) if stream is None else stream
    T = config_template.T
    log_h = math.log(config_template.h)
    x = target.sample(stream) if target.has_exact_sampler else np.zeros(target.dim)

    def run(h, n):
        h = min(h, T)
        cfg = SamplerConfig(h=h, T=T, gamma=config_template.gamma, alpha=config_template.alpha, n_samples=n,
                            seed=config_template.seed, zero_policy=config_template.zero_policy)
        return run_sampler(sampler, target, cfg, stream, x0=x, warmup=0)

    history = []
    best = (math.inf, math.exp(log_h), float("nan"))
    k = 0
    per_round = max(1, window // batch)
    while k < max_batches:
        for _ in range(per_round):
            k += 1
            res = run(math.exp(log_h), batch)
            x = res.positions[-1]
            acc = res.acceptance_rate
            log_h += kappa / k**0.6 * (acc - target_accept)
            log_h = min(log_h, math.log(T))
            history.append(math.exp(log_h))
        h = math.exp(log_h)
        res = run(h, window)
        x = res.positions[-1]
        acc = res.acceptance_rate
        if abs(acc - target_accept) < best[0]:
            best = (abs(acc - target_accept), h, acc)
        if abs(acc - target_accept) <= tolerance:
            return Calibration(h, acc, True, np.array(history))
    warnings.warn("step-size calibration did not converge within the budget", RuntimeWarning)
    return Calibration(best[1], best[2], False, np.array(history))
