"""Optimal scaling in high dimension for product targets.

With h = ell * d^(-1/4), the total energy error of a MALT proposal is
asymptotically N(ell^4 Sigma / 2, ell^4 Sigma), so the mean acceptance is
2 Psi(-ell^2 sqrt(Sigma) / 2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .analytics import langevin_acf
from .rng import RngStream

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def Psi(x):
    """Standard normal CDF."""
    return ndtr(x)


def psi(x):
    """Standard normal density."""
    x = np.asarray(x, dtype=float)
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


@dataclass
class ScalingReport:
    sigma_clt: float
    ell_star: float
    acc_star: float
    eff_star: float
    s_star: float = float("nan")
    upsilon_f: Optional[dict] = None


def acceptance_curve(ell, sigma_clt: float):
    if not sigma_clt > 0:
        raise ValueError("Sigma must be positive")
    return 2.0 * Psi(-np.asarray(ell, dtype=float) ** 2 * math.sqrt(sigma_clt) / 2.0)


def efficiency_curve(ell, sigma_clt: float):
    return np.asarray(ell, dtype=float) * acceptance_curve(ell, sigma_clt)


def first_order_residual(s: float) -> float:
    """s psi(-s) / Psi(-s) - 1/2; its root gives the optimal rescaled step."""
    return float(s * psi(s) / Psi(-s) - 0.5)


def solve_s_star(lo: float = 0.0, hi: float = 10.0, tol: float = 1e-15) -> float:
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if first_order_residual(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def optimal_ell(sigma_clt: float) -> ScalingReport:
    if sigma_clt < 0:
        raise ValueError("Sigma must be non-negative")
    s = solve_s_star()
    acc = float(2.0 * Psi(-s))
    if sigma_clt == 0:
        return ScalingReport(0.0, math.inf, acc, math.inf, s)
    ell = math.sqrt(2.0 * s) * sigma_clt**-0.25
    return ScalingReport(sigma_clt, ell, acc, ell * acc, s)


def sigma_gaussian(gamma: float, T: float) -> float:
    """Sigma for the standard Gaussian marginal: (1 - rho^2) / 16."""
    if not T > 0:
        raise ValueError("T must be positive")
    rho = langevin_acf(1.0, gamma, T)
    return (1.0 - rho * rho) / 16.0


def s_function(marginal, x, v):
    """Integrand whose time integral along a Langevin path drives the energy error."""
    return v**3 * marginal.d3phi(x) / 12.0 + v * marginal.d2phi(x) * marginal.dphi(x) / 4.0


def _obabo_paths(marginal, x, v, gamma, h, L, stream, callback):
    """Vectorized one-dimensional OBABO over independent paths."""
    eta = math.exp(-gamma * h / 2)
    c = math.sqrt(1 - eta * eta)
    g = marginal.dphi(x)
    n = x.shape
    for i in range(L):
        if gamma > 0:
            v = eta * v + c * stream.standard_normal(n)
        v = v - 0.5 * h * g
        x = x + h * v
        g = marginal.dphi(x)
        v = v - 0.5 * h * g
        if gamma > 0:
            v = eta * v + c * stream.standard_normal(n)
        callback(i + 1, x, v)
    return x, v


def sigma_monte_carlo(marginal, gamma: float, T: float, n_paths: int, fine_h: float,
                      stream: Optional[RngStream] = None):
    """Monte Carlo estimate of E[(int_0^T S(X_t, V_t) dt)^2] and its standard error.

    Paths start from exact stationary draws and follow OBABO at step ``fine_h``;
    the time integral uses the trapezoid rule on the step grid.
    """
    stream = RngStream(0) if stream is None else stream
    if not T > 0:
        return 0.0, 0.0
    L = max(1, int(round(T / fine_h)))
    h = T / L
    x = marginal.draw(stream, n_paths)
    v = stream.standard_normal(n_paths)
    s_prev = [s_function(marginal, x, v)]
    integral = np.zeros(n_paths)

    def accumulate(_, xi, vi):
        s_now = s_function(marginal, xi, vi)
        integral[:] += 0.5 * h * (s_prev[0] + s_now)
        s_prev[0] = s_now

    _obabo_paths(marginal, x, v, gamma, h, L, stream, accumulate)
    sq = integral**2
    est = float(sq.mean())
    se = float(sq.std(ddof=1) / math.sqrt(n_paths))
    if est > 0 and se / est > 0.1:
        warnings.warn(f"Sigma estimate not converged: relative standard error {se / est:.3f}", RuntimeWarning)
    return est, se


@dataclass
class DeltaStats:
    d: int
    h: float
    L: int
    mean_delta: float
    var_delta: float
    acceptance: float
    n: int


def _delta_batch(marginal, d, n, gamma, h, L, stream):
    x = marginal.draw(stream, (n, d))
    v = stream.standard_normal((n, d))
    eta = math.exp(-gamma * h / 2)
    c = math.sqrt(1 - eta * eta)
    phi = np.sum(marginal.phi(x), axis=1)
    g = marginal.dphi(x)
    gg = np.sum(g * g, axis=1)
    delta = np.zeros(n)
    for _ in range(L):
        if gamma > 0:
            v = eta * v + c * stream.standard_normal((n, d))
        v = v - 0.5 * h * g
        x1 = x + h * v
        g1 = marginal.dphi(x1)
        phi1 = np.sum(marginal.phi(x1), axis=1)
        v = v - 0.5 * h * g1
        if gamma > 0:
            v = eta * v + c * stream.standard_normal((n, d))
        gg1 = np.sum(g1 * g1, axis=1)
        delta += phi1 - phi - 0.5 * np.sum((x1 - x) * (g1 + g), axis=1) + h * h / 8 * (gg1 - gg)
        x, g, phi, gg = x1, g1, phi1, gg1
    return delta


def delta_clt_experiment(marginal, gamma: float, T: float, ell: float, dims, n_iter: int,
                         stream: Optional[RngStream] = None, batch: int = 1000):
    """Energy errors of independent MALT proposals from stationarity at h = ell d^(-1/4)."""
    stream = RngStream(0) if stream is None else stream
    out = []
    for d in dims:
        h = ell * d**-0.25
        L = int(math.floor(T / h))
        if L < 1:
            raise ValueError(f"T={T} shorter than h={h:.4g} at d={d}")
        parts = []
        done = 0
        while done < n_iter:
            m = min(batch, n_iter - done)
            parts.append(_delta_batch(marginal, d, m, gamma, h, L, stream))
            done += m
        delta = np.concatenate(parts)
        acc = float(np.mean(np.minimum(1.0, np.exp(-delta))))
        out.append(DeltaStats(d, h, L, float(delta.mean()), float(delta.var(ddof=1)), acc, n_iter))
    return out
