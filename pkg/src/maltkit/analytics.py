"""Closed-form autocorrelations, ESS of AR chains, and the contraction rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNDERDAMPED, CRITICAL, OVERDAMPED = "underdamped", "critical", "overdamped"
ESS_CAP = 1e6
_CRIT_TOL = 1e-6


@dataclass
class AcfCurve:
    times: np.ndarray
    values: np.ndarray
    regime: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class RateReport:
    r: float
    lam: float
    C: float
    C_prime: float


def damping_regime(sigma: float, gamma: float) -> str:
    w0 = 1.0 / sigma
    if abs(0.5 * gamma - w0) <= _CRIT_TOL * w0:
        return CRITICAL
    return UNDERDAMPED if 0.5 * gamma < w0 else OVERDAMPED


def langevin_acf(sigma: float, gamma: float, T: float) -> float:
    """Stationary lag-T autocorrelation of X under Langevin dynamics, Gaussian marginal of scale sigma."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if gamma < 0 or T < 0:
        raise ValueError("gamma and T must be non-negative")
    beta = 0.5 * gamma
    w0 = 1.0 / sigma
    regime = damping_regime(sigma, gamma)
    if regime == CRITICAL:
        # exact at gamma = 2/sigma, plus the first-order term in (w0^2 - beta^2)
        eps = (w0 - beta) * (w0 + beta)
        return math.exp(-beta * T) * (1.0 + beta * T - eps * (T * T / 2.0 + beta * T**3 / 6.0))
    if regime == UNDERDAMPED:
        om = math.sqrt(w0 * w0 - beta * beta)
        return math.exp(-beta * T) * (math.cos(om * T) + beta / om * math.sin(om * T))
    om = math.sqrt(beta * beta - w0 * w0)
    grow, decay = math.exp((om - beta) * T), math.exp(-(om + beta) * T)
    return 0.5 * (grow + decay) + 0.5 * beta / om * (grow - decay)


def langevin_acf_curve(sigma: float, gamma: float, times) -> AcfCurve:
    times = np.asarray(times, dtype=float)
    return AcfCurve(times, np.array([langevin_acf(sigma, gamma, t) for t in times]), damping_regime(sigma, gamma))


def hamiltonian_acf(sigma: float, T: float) -> float:
    return math.cos(T / sigma)


def rhmc_mean_acf(sigma: float, T: float) -> float:
    """E[cos(tau/sigma)] for tau ~ Exp with mean T."""
    if not (sigma > 0 and T > 0):
        raise ValueError("sigma and T must be positive")
    return sigma * sigma / (sigma * sigma + T * T)


def rhmc_square_acf(sigma: float, T: float) -> float:
    if not (sigma > 0 and T > 0):
        raise ValueError("sigma and T must be positive")
    s2, t2 = sigma * sigma, T * T
    return (s2 + 2 * t2) / (s2 + 4 * t2)


def worst_acf(scales, sampler: str, f: str, T: float, gamma=None) -> float:
    """Largest per-coordinate ACF over the scales, for f(x) = x ("mean") or x^2 ("square").

    ``sampler`` is "hamiltonian", "langevin" or "rhmc". For Langevin the
    friction defaults to 2/sigma_max, where the largest scale dominates.
    """
    scales = np.asarray(scales, dtype=float)
    if scales.size == 0 or np.any(scales <= 0):
        raise ValueError("scales must be positive")
    if f not in ("mean", "square"):
        raise ValueError(f"f must be 'mean' or 'square', got {f!r}")
    if sampler == "hamiltonian":
        c = np.cos(T / scales)
        return float(np.max(c) if f == "mean" else np.max(c * c))
    if sampler == "langevin":
        g = 2.0 / scales.max() if gamma is None else gamma
        rho = np.array([langevin_acf(s, g, T) for s in scales])
        return float(np.max(rho) if f == "mean" else np.max(rho * rho))
    if sampler == "rhmc":
        vals = [rhmc_mean_acf(s, T) if f == "mean" else rhmc_square_acf(s, T) for s in scales]
        return float(max(vals))
    raise ValueError(f"unknown sampler family {sampler!r}")


def ar_ess(rho: float, T: float) -> float:
    """ESS per unit integration time of an AR(1) chain, normalized to 1 at rho = 0, T = pi/2."""
    if not T > 0:
        raise ValueError("T must be positive")
    if rho > 1 or rho < -1:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    if rho <= -1 + 1e-15:
        return math.inf
    return (math.pi / (2 * T)) * (1 - rho) / (1 + rho)


def capped(value: float, cap: float = ESS_CAP) -> float:
    return min(value, cap)


def _check_bounds(m, M, alpha=None):
    if not 0 < m <= M:
        raise ValueError(f"need 0 < m <= M, got m={m}, M={M}")
    if alpha is not None and not 0 <= alpha < 1:
        raise ValueError(f"alpha must lie in [0, 1), got {alpha}")


def rhmc_contraction_rate(m: float, M: float, alpha: float) -> RateReport:
    """Contraction rate of randomized HMC with persistence alpha at its recommended intensity."""
    _check_bounds(m, M, alpha)
    root = math.sqrt(M + m)
    return RateReport(
        r=(1 + alpha) * m / (2 * root),
        lam=2 * root / (1 - alpha * alpha),
        C=math.sqrt(4 / (3 - alpha)),
        C_prime=((5 + alpha + 4 * math.sqrt(1 + alpha)) / (3 - alpha)) ** 0.25,
    )


def langevin_rate(m: float, M: float, gamma: float) -> float:
    _check_bounds(m, M)
    if not gamma > math.sqrt(M):
        raise ValueError(f"need gamma > sqrt(M) = {math.sqrt(M):.6g}, got {gamma}")
    return min(m, gamma * gamma - M) / gamma


def deligiannidis_rate(m: float, M: float, alpha: float):
    """Earlier rate/intensity pair for the same process, kept for comparison."""
    _check_bounds(m, M, alpha)
    root = math.sqrt(M + m)
    r = (1 + alpha) * m / (2 * root) - alpha * m**1.5 / (4 * (M + m))
    lam = (2 * root - (1 - alpha) * m / root) / (1 - alpha * alpha)
    return r, lam


def twist_matrix(m: float, M: float, alpha: float):
    """(a, b, c) of the quadratic form a|dx|^2 + 2b dx.dv + c|dv|^2."""
    _check_bounds(m, M, alpha)
    return 2 * (M + m) / (1 + alpha), math.sqrt(M + m), 2.0


def langevin_twist(gamma: float):
    return gamma * gamma, gamma, 2.0
