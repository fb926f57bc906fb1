"""Single-step integrators and exact Gaussian transitions.

The kinetic Langevin dynamics with unit mass are

    dX = V dt,    dV = -grad Phi(X) dt - gamma V dt + sqrt(2 gamma) dW.

``leapfrog_step`` is the velocity Verlet (BAB) map and ``obabo_step`` wraps it
between two exact half-step Ornstein-Uhlenbeck velocity refreshments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .rng import RngStream


@dataclass
class PhaseState:
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.shape != self.v.shape:
            raise ValueError(f"x and v shapes differ: {self.x.shape} vs {self.v.shape}")

    def copy(self) -> "PhaseState":
        return PhaseState(self.x.copy(), self.v.copy())

    def flipped(self) -> "PhaseState":
        return PhaseState(self.x.copy(), -self.v)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v)))


@dataclass(frozen=True)
class StepParams:
    h: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"time-step must be positive, got {self.h}")
        if not self.gamma >= 0:
            raise ValueError(f"friction must be non-negative, got {self.gamma}")

    @property
    def eta(self) -> float:
        return math.exp(-self.gamma * self.h / 2)

    @property
    def noise_scale(self) -> float:
        eta = self.eta
        return math.sqrt(1.0 - eta * eta)


@dataclass
class NoisePair:
    xi: np.ndarray
    xi_prime: np.ndarray

    @classmethod
    def draw(cls, stream: RngStream, d: int) -> "NoisePair":
        return cls(stream.standard_normal(d), stream.standard_normal(d))


def leapfrog_step(target, state: PhaseState, h: float, grad0: Optional[np.ndarray] = None):
    """One velocity Verlet step; returns the new state and the gradient at its position."""
    if not h > 0:
        raise ValueError(f"time-step must be positive, got {h}")
    g0 = target.gradient(state.x) if grad0 is None else grad0
    v_half = state.v - 0.5 * h * g0
    x1 = state.x + h * v_half
    g1 = target.gradient(x1)
    return PhaseState(x1, v_half - 0.5 * h * g1), g1


def obabo_step(target, state: PhaseState, params: StepParams, noise: Optional[NoisePair],
               grad0: Optional[np.ndarray] = None):
    """O, B, A, B, O. With gamma = 0 this is exactly ``leapfrog_step`` and ``noise`` is ignored."""
    if params.gamma == 0:
        return leapfrog_step(target, state, params.h, grad0)
    eta = params.eta
    c = math.sqrt(1.0 - eta * eta)
    mid = PhaseState(state.x, eta * state.v + c * noise.xi)
    out, g1 = leapfrog_step(target, mid, params.h, grad0)
    out.v = eta * out.v + c * noise.xi_prime
    return out, g1


def local_energy_error(target, x0, x1, grad0, grad1, h: float, phi0=None, phi1=None) -> float:
    """E_h(x0, x1): the energy error of one BAB step, written in positions and gradients only.

    ``phi0``/``phi1`` may be passed to avoid re-evaluating the potential.
    """
    x0 = np.asarray(x0)
    x1 = np.asarray(x1)
    p0 = target.potential(x0) if phi0 is None else phi0
    p1 = target.potential(x1) if phi1 is None else phi1
    return (p1 - p0
            - 0.5 * np.sum((x1 - x0) * (grad1 + grad0), axis=-1)
            + h * h / 8.0 * (np.sum(grad1 * grad1, axis=-1) - np.sum(grad0 * grad0, axis=-1)))


def _series_c_s(delta, t):
    """cos(sqrt(delta) t) and sin(sqrt(delta) t)/sqrt(delta) by their Taylor series in delta."""
    x = delta * t * t
    c = 1.0 - x / 2.0 + x * x / 24.0 - x**3 / 720.0
    s = t * (1.0 - x / 6.0 + x * x / 120.0 - x**3 / 5040.0)
    return c, s


def matexp_2x2(sigma: float, gamma: float, T: float) -> np.ndarray:
    """exp(-T A) for A = [[0, -1], [sigma^-2, gamma]].

    Uses N = A - (gamma/2) I, which satisfies N^2 = -delta I with
    delta = sigma^-2 - gamma^2/4, so exp(-T N) = C I - S N with C and S the
    (hyperbolic) cosine and sine-over-frequency.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if gamma < 0 or T < 0:
        raise ValueError("gamma and T must be non-negative")
    w0 = 1.0 / sigma
    beta = 0.5 * gamma
    delta = (w0 - beta) * (w0 + beta)
    if abs(w0 - beta) <= 1e-6 * w0:
        c, s = _series_c_s(delta, T)
        damp = math.exp(-beta * T)
        ec, es = damp * c, damp * s
    elif delta > 0:
        k = math.sqrt(delta)
        damp = math.exp(-beta * T)
        ec, es = damp * math.cos(k * T), damp * math.sin(k * T) / k
    else:
        k = math.sqrt(-delta)
        # e^{-beta T} cosh(kT) and e^{-beta T} sinh(kT)/k without forming cosh
        up, down = math.exp((k - beta) * T), math.exp(-(k + beta) * T)
        ec, es = 0.5 * (up + down), 0.5 * (up - down) / k
    n = np.array([[-beta, -1.0], [w0 * w0, beta]])
    return ec * np.eye(2) - es * n


def ou_exact_step(scales, gamma: float, T: float, state: PhaseState, stream: RngStream) -> PhaseState:
    """Exact transition of the Langevin SDE for a diagonal Gaussian target over time T.

    Consumes 2d normals (xi for position, then xi for velocity) whatever gamma is.
    """
    if gamma < 0:
        raise ValueError(f"friction must be non-negative, got {gamma}")
    if not T > 0:
        raise ValueError(f"duration must be positive, got {T}")
    scales = np.asarray(scales, dtype=float)
    d = scales.size
    mats = np.array([matexp_2x2(s, gamma, T) for s in scales])
    x, v = state.x, state.v
    mx = mats[:, 0, 0] * x + mats[:, 0, 1] * v
    mv = mats[:, 1, 0] * x + mats[:, 1, 1] * v
    l11, l21, l22 = ou_noise_factor(scales, mats)
    z = stream.standard_normal(2 * d)
    zx, zv = z[:d], z[d:]
    return PhaseState(mx + l11 * zx, mv + l21 * zx + l22 * zv)


def ou_noise_factor(scales, mats):
    """Cholesky factor of diag(s^2, 1) - M diag(s^2, 1) M^T, per coordinate."""
    var = np.asarray(scales) ** 2
    a, b, c, e = mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1]
    pxx = np.maximum(var - (a * a * var + b * b), 0.0)
    pxv = -(a * c * var + b * e)
    pvv = np.maximum(1.0 - (c * c * var + e * e), 0.0)
    l11 = np.sqrt(pxx)
    safe = l11 > 1e-300
    l21 = np.where(safe, pxv / np.where(safe, l11, 1.0), 0.0)
    l22 = np.sqrt(np.maximum(pvv - l21 * l21, 0.0))
    return l11, l21, l22


def _ou_sd(gamma: float, length: float) -> float:
    if gamma == 0:
        return math.sqrt(length)
    return math.sqrt(-math.expm1(-2.0 * gamma * length) / (2.0 * gamma))


def refine_noise(s: float, m: float, t: float, gamma: float, xi_sm, xi_mt):
    """Coarse standardized OU increment on (s, t) from the two standardized halves.

    Each xi stands for int e^{-gamma(end-u)} dW_u over its interval divided by
    its standard deviation.
    """
    if not s < m < t:
        raise ValueError(f"need s < m < t, got {(s, m, t)}")
    if gamma < 0:
        raise ValueError("friction must be non-negative")
    sd_sm, sd_mt, sd_st = _ou_sd(gamma, m - s), _ou_sd(gamma, t - m), _ou_sd(gamma, t - s)
    w1 = math.exp(-gamma * (t - m)) * sd_sm / sd_st
    w2 = sd_mt / sd_st
    return w1 * np.asarray(xi_sm) + w2 * np.asarray(xi_mt)
