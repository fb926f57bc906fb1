"""Synchronous couplings for measuring contraction, and the persistent-RHMC limit check.

Two copies driven by the same randomness (Poisson clocks and refreshments for
randomized HMC, Brownian increments for Langevin) are run from nearby starts;
the decay rate of E|Z_t - Z'_t|_A^2 estimates twice the contraction rate.
Pairs are simulated as batches of shape (n_pairs, d).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .analytics import langevin_acf, langevin_twist, twist_matrix
from .dynamics import PhaseState
from .rng import RngStream


@dataclass
class CoupledPair:
    z: PhaseState
    z_prime: PhaseState


@dataclass
class ContractionTrace:
    times: np.ndarray
    twisted_norm_sq: np.ndarray
    fitted_slope: float
    twist: tuple = ()


def _check_twist(a, b, c):
    if not (a > 0 and c > 0 and a * c - b * b > 0):
        raise ValueError(f"(a, b, c) = {(a, b, c)} is not positive definite")


def twisted_norm_sq(pair: CoupledPair, a: float, b: float, c: float) -> float:
    _check_twist(a, b, c)
    dx = pair.z.x - pair.z_prime.x
    dv = pair.z.v - pair.z_prime.v
    return float(a * np.sum(dx * dx) + 2 * b * np.sum(dx * dv) + c * np.sum(dv * dv))


def _batch_twisted(dx, dv, a, b, c):
    return a * np.sum(dx * dx, axis=-1) + 2 * b * np.sum(dx * dv, axis=-1) + c * np.sum(dv * dv, axis=-1)


def fit_log_slope(times, values, keep: float = 0.8) -> float:
    """Least-squares slope of log(values) against time over the central ``keep`` fraction."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    n = times.size
    cut = int(round(n * (1 - keep) / 2))
    sl = slice(cut, n - cut if cut else n)
    t, y = times[sl], values[sl]
    ok = y > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(t[ok], np.log(y[ok]), 1)[0])


def _stiffest_displacement(target, n_pairs):
    d = target.dim
    scales = target.scales if target.scales is not None else np.ones(d)
    e = np.zeros((n_pairs, d))
    e[:, int(np.argmin(scales))] = 1.0
    return e


def _start_pairs(target, n_pairs, stream, x0=None, identical=False):
    if x0 is None:
        x = target.sample(stream, n_pairs) if target.has_exact_sampler else np.zeros((n_pairs, target.dim))
    else:
        x = np.broadcast_to(np.asarray(x0, dtype=float), (n_pairs, target.dim)).copy()
    v = stream.standard_normal((n_pairs, target.dim))
    xp = x.copy() if identical else x + _stiffest_displacement(target, n_pairs)
    return x, v, xp, v.copy()


def rhmc_coupled_run(target, alpha: float, duration: float, n_pairs: int, stream: Optional[RngStream] = None,
                     n_records: int = 101, h_fine: Optional[float] = None, identical: bool = False,
                     x0=None) -> ContractionTrace:
    """Randomized HMC pairs sharing Poisson event times and refreshment draws.

    Refreshments v <- alpha v + sqrt(1 - alpha^2) xi happen at the events of a
    Poisson clock with the recommended intensity; the flow in between uses
    leapfrog at step ``h_fine``. Events are resolved at the step level: after
    each step the number k of events in it is drawn and the velocity is
    refreshed k times with fresh shared noise.
    """
    if target.convexity_bounds is None:
        raise ValueError("target must expose convexity bounds (m, M)")
    stream = RngStream(0) if stream is None else stream
    m, M = target.convexity_bounds
    a, b, c = twist_matrix(m, M, alpha)
    lam = 2 * math.sqrt(M + m) / (1 - alpha * alpha)
    if h_fine is None:
        h_fine = min(0.01, 0.05 / lam)
    if h_fine * lam > 0.05 + 1e-12:
        warnings.warn(f"h_fine * lambda = {h_fine * lam:.3g} exceeds 0.05", RuntimeWarning)
    n_steps = int(math.ceil(duration / h_fine))
    h = duration / n_steps
    x, v, xp, vp = _start_pairs(target, n_pairs, stream, x0, identical)
    record_every = max(1, n_steps // (n_records - 1))
    times, norms = [0.0], [float(np.mean(_batch_twisted(x - xp, v - vp, a, b, c)))]
    beta = math.sqrt(1 - alpha * alpha)
    g, gp = target.gradient(x), target.gradient(xp)
    for k in range(1, n_steps + 1):
        v = v - 0.5 * h * g
        vp = vp - 0.5 * h * gp
        x = x + h * v
        xp = xp + h * vp
        g, gp = target.gradient(x), target.gradient(xp)
        v = v - 0.5 * h * g
        vp = vp - 0.5 * h * gp
        events = stream.uniform(n_pairs)
        # Poisson(lam h) event counts through the inverse CDF, capped at 3 (P > 3 is negligible)
        p0 = math.exp(-lam * h)
        cdf = p0
        counts = np.zeros(n_pairs, dtype=int)
        term = p0
        for j in range(1, 4):
            counts += events > cdf
            term *= lam * h / j
            cdf += term
        for j in range(1, int(counts.max(initial=0)) + 1):
            hit = counts >= j
            xi = stream.standard_normal((n_pairs, target.dim))
            v = np.where(hit[:, None], alpha * v + beta * xi, v)
            vp = np.where(hit[:, None], alpha * vp + beta * xi, vp)
        if k % record_every == 0 or k == n_steps:
            times.append(k * h)
            norms.append(float(np.mean(_batch_twisted(x - xp, v - vp, a, b, c))))
    times, norms = np.array(times), np.array(norms)
    return ContractionTrace(times, norms, fit_log_slope(times, norms), (a, b, c))


def langevin_coupled_run(target, gamma: float, duration: float, n_pairs: int,
                         stream: Optional[RngStream] = None, h: float = 0.01, n_records: int = 101,
                         identical: bool = False, x0=None) -> ContractionTrace:
    """Two OBABO chains sharing every noise draw, measured in the (gamma^2, gamma, 2) twisted norm."""
    if target.convexity_bounds is None:
        raise ValueError("target must expose convexity bounds (m, M)")
    m, M = target.convexity_bounds
    if not gamma > math.sqrt(M):
        raise ValueError(f"need gamma > sqrt(M) = {math.sqrt(M):.6g}, got {gamma}")
    stream = RngStream(0) if stream is None else stream
    a, b, c = langevin_twist(gamma)
    n_steps = int(math.ceil(duration / h))
    h = duration / n_steps
    eta = math.exp(-gamma * h / 2)
    s = math.sqrt(1 - eta * eta)
    x, v, xp, vp = _start_pairs(target, n_pairs, stream, x0, identical)
    record_every = max(1, n_steps // (n_records - 1))
    times, norms = [0.0], [float(np.mean(_batch_twisted(x - xp, v - vp, a, b, c)))]
    g, gp = target.gradient(x), target.gradient(xp)
    shape = (n_pairs, target.dim)
    for k in range(1, n_steps + 1):
        xi = stream.standard_normal(shape)
        v = eta * v + s * xi
        vp = eta * vp + s * xi
        v = v - 0.5 * h * g
        vp = vp - 0.5 * h * gp
        x = x + h * v
        xp = xp + h * vp
        g, gp = target.gradient(x), target.gradient(xp)
        v = v - 0.5 * h * g
        vp = vp - 0.5 * h * gp
        xi = stream.standard_normal(shape)
        v = eta * v + s * xi
        vp = eta * vp + s * xi
        if k % record_every == 0 or k == n_steps:
            times.append(k * h)
            norms.append(float(np.mean(_batch_twisted(x - xp, v - vp, a, b, c))))
    times, norms = np.array(times), np.array(norms)
    return ContractionTrace(times, norms, fit_log_slope(times, norms), (a, b, c))


@dataclass
class LimitCheck:
    alpha: float
    lam: float
    empirical: float
    std_error: float
    reference: float

    @property
    def error(self) -> float:
        return abs(self.empirical - self.reference)


def persistent_rhmc_exact(sigma: float, lam: float, alpha: float, T: float, n: int, stream: RngStream):
    """Positions at times 0 and T of n independent stationary 1-d persistent RHMC paths.

    The Hamiltonian flow of a Gaussian is a rotation, so paths are simulated
    event by event without discretization.
    """
    x = sigma * stream.standard_normal(n)
    v = stream.standard_normal(n)
    x0 = x.copy()
    w = 1.0 / sigma
    beta = math.sqrt(1 - alpha * alpha)
    remaining = np.full(n, float(T))
    active = np.ones(n, dtype=bool)
    while active.any():
        idx = np.flatnonzero(active)
        wait = stream.exponential(lam, idx.size)
        dt = np.minimum(wait, remaining[idx])
        cs, sn = np.cos(w * dt), np.sin(w * dt)
        xi_, vi_ = x[idx], v[idx]
        x[idx] = cs * xi_ + sn * vi_ / w
        v[idx] = -sn * w * xi_ + cs * vi_
        remaining[idx] -= dt
        fired = wait < remaining[idx] + dt
        fired &= remaining[idx] > 0
        refresh = idx[fired]
        if refresh.size:
            v[refresh] = alpha * v[refresh] + beta * stream.standard_normal(refresh.size)
        active[idx[~fired]] = False
        active[idx[remaining[idx] <= 0]] = False
    return x0, x


def generator_limit_check(sigma: float, gamma: float, alphas, T: float, n_samples: int,
                          stream: Optional[RngStream] = None):
    """Lag-T correlation of persistent RHMC at intensity 2 gamma / (1 - alpha^2) versus Langevin."""
    stream = RngStream(0) if stream is None else stream
    ref = langevin_acf(sigma, gamma, T)
    out = []
    for child, alpha in zip(stream.split(len(alphas)), alphas):
        lam = 2 * gamma / (1 - alpha * alpha)
        x0, xT = persistent_rhmc_exact(sigma, lam, alpha, T, n_samples, child)
        prod = x0 * xT / sigma**2
        out.append(LimitCheck(alpha, lam, float(prod.mean()), float(prod.std(ddof=1) / math.sqrt(n_samples)), ref))
    return out


def rhmc_renewal_acf(sigma: float, lam: float, T: float, n_grid: int = 4000) -> float:
    """Lag-T position correlation of full-refresh RHMC with event rate lam (alpha = 0).

    c(t) = E[x_t x_0]/sigma^2 solves c(t) = e^{-lam t} cos(t/sigma) + int_0^t lam e^{-lam s} cos(s/sigma) c(t-s) ds,
    discretized with the trapezoid rule.
    """
    w = 1.0 / sigma
    dt = T / n_grid
    t = np.arange(n_grid + 1) * dt
    k = lam * np.exp(-lam * t) * np.cos(w * t)
    f = np.exp(-lam * t) * np.cos(w * t)
    c = np.empty_like(t)
    c[0] = 1.0
    for i in range(1, n_grid + 1):
        acc = 0.5 * k[i] * c[0] + np.dot(k[1:i], c[i - 1:0:-1])
        # k[0] c[i] / 2 term moved to the left-hand side
        c[i] = (f[i] + dt * acc) / (1 - 0.5 * dt * k[0])
    return float(c[-1])
