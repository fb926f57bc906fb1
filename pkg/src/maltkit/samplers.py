"""Chain generators: MALT, GHMC (HMC, MALA), randomized HMC and exact AR references.

Per-iteration draw order, relied on by the equivalence tests:

* MALT: velocity (d normals), trajectory noise (2Ld normals, only if gamma > 0), then U.
* GHMC: refreshment xi (d normals), then U.
* RHMC: duration tau (1 exponential), refreshment xi (d normals), then U.

The inner loops work on raw arrays and keep the trailing gradient of a step
as the leading gradient of the next one, so a trajectory of L steps costs L
gradient evaluations plus one for the very first position of the chain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .dynamics import PhaseState, matexp_2x2, ou_exact_step
from .rng import RngStream

ZERO_POLICIES = ("clamp", "resample")


@dataclass
class SamplerConfig:
    """Tuning parameters. ``T`` is the (mean, for RHMC) integration time.

    When ``L`` is given it overrides ``floor(T/h)`` and ``T`` is reset to ``L*h``.
    """

    h: float
    T: Optional[float] = None
    gamma: float = 0.0
    alpha: float = 0.0
    n_samples: int = 1000
    seed: int = 0
    L: Optional[int] = None
    zero_policy: str = "clamp"

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.L is not None:
            if int(self.L) < 1:
                raise ValueError(f"L must be >= 1, got {self.L}")
            self.L = int(self.L)
            self.T = self.L * self.h
        if self.T is None:
            raise ValueError("either T or L is required")
        if not self.T >= self.h:
            raise ValueError(f"need T >= h, got T={self.T}, h={self.h}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be non-negative, got {self.gamma}")
        if not 0 <= self.alpha < 1:
            raise ValueError(f"alpha must lie in [0, 1), got {self.alpha}")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.zero_policy not in ZERO_POLICIES:
            raise ValueError(f"zero_policy must be one of {ZERO_POLICIES}")

    @property
    def steps(self) -> int:
        return self.L if self.L is not None else int(math.floor(self.T / self.h))

    @property
    def eta(self) -> float:
        return math.exp(-self.gamma * self.h / 2)


@dataclass
class Trajectory:
    states: List[PhaseState]
    delta: float
    gradient_evals: int
    local_errors: Optional[np.ndarray] = None


@dataclass
class ChainResult:
    positions: np.ndarray
    accepted: np.ndarray
    deltas: np.ndarray
    total_gradient_evals: int
    final_state: PhaseState
    steps: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    h: float = float("nan")
    sampler: str = ""
    warmup: int = 0

    @property
    def n_samples(self) -> int:
        return self.positions.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if self.accepted.size else float("nan")

    @property
    def mean_steps(self) -> float:
        return float(np.mean(self.steps)) if self.steps.size else float("nan")


def _initial_position(target, stream: RngStream, x0, warmup: Optional[int], n: int):
    """Stationary draw when possible; otherwise the given start plus a warm-up."""
    if x0 is None:
        if target.has_exact_sampler:
            return np.asarray(target.sample(stream), dtype=float), (0 if warmup is None else warmup)
        x0 = np.zeros(target.dim)
    x0 = np.asarray(x0, dtype=float).copy()
    if x0.shape != (target.dim,):
        raise ValueError(f"start position must have shape ({target.dim},)")
    return x0, (max(1, n // 10) if warmup is None else warmup)


def _metropolis(delta: float, u: float) -> bool:
    if not math.isfinite(delta):
        return False
    return delta <= 0 or u <= math.exp(-delta)


def _sq(a) -> float:
    return float(np.dot(a, a))


# ---------------------------------------------------------------------------
# MALT
# ---------------------------------------------------------------------------

def _malt_kernel(target, x, phi, g, v, h, L, eta, c, noise, record=False):
    """L OBABO steps from (x, v); returns the end point and the accumulated error.

    ``noise`` has shape (L, 2, d) or is None for gamma = 0.
    """
    hh = 0.5 * h
    h2_8 = h * h / 8.0
    gg = _sq(g)
    delta = 0.0
    states = [PhaseState(x.copy(), v.copy())] if record else None
    errs = np.empty(L) if record else None
    for i in range(L):
        if noise is not None:
            v = eta * v + c * noise[i, 0]
        v = v - hh * g
        x1 = x + h * v
        phi1, g1 = target.value_and_grad(x1)
        v = v - hh * g1
        if noise is not None:
            v = eta * v + c * noise[i, 1]
        gg1 = _sq(g1)
        e = (phi1 - phi) - 0.5 * float(np.dot(x1 - x, g1 + g)) + h2_8 * (gg1 - gg)
        delta += e
        x, phi, g, gg = x1, phi1, g1, gg1
        if record:
            states.append(PhaseState(x.copy(), v.copy()))
            errs[i] = e
    return x, phi, g, v, delta, states, errs


def _draw_malt_inputs(stream, d, L, gamma):
    v0 = stream.standard_normal(d)
    noise = stream.standard_normal((L, 2, d)) if gamma > 0 else None
    return v0, noise


def propose_malt_trajectory(target, start_x, config: SamplerConfig, stream: RngStream,
                            grad0=None, phi0=None) -> Trajectory:
    """Fresh velocity, then L OBABO steps with the accumulated energy error."""
    x = np.asarray(start_x, dtype=float)
    evals = 0
    if grad0 is None or phi0 is None:
        phi0, grad0 = target.value_and_grad(x)
        evals += 1
    L = config.steps
    v0, noise = _draw_malt_inputs(stream, target.dim, L, config.gamma)
    eta = config.eta
    c = math.sqrt(1.0 - eta * eta)
    *_, delta, states, errs = _malt_kernel(target, x, phi0, grad0, v0, config.h, L, eta, c, noise, record=True)
    return Trajectory(states, float(delta), evals + L, errs)


def malt_run(target, config: SamplerConfig, stream: Optional[RngStream] = None, x0=None,
             warmup: Optional[int] = None) -> ChainResult:
    """Metropolis adjusted Langevin trajectories with full velocity refresh per iteration."""
    stream = RngStream(config.seed) if stream is None else stream
    n = config.n_samples
    x, warmup = _initial_position(target, stream, x0, warmup, n)
    d = target.dim
    L, h = config.steps, config.h
    eta = config.eta
    c = math.sqrt(1.0 - eta * eta)
    phi, g = target.value_and_grad(x)
    evals = 1
    total = warmup + n
    positions = np.empty((n, d))
    accepted = np.zeros(n, dtype=bool)
    deltas = np.empty(n)
    v_last = np.zeros(d)
    for it in range(total):
        v0, noise = _draw_malt_inputs(stream, d, L, config.gamma)
        x1, phi1, g1, v1, delta, _, _ = _malt_kernel(target, x, phi, g, v0, h, L, eta, c, noise)
        evals += L
        u = stream.uniform()
        ok = _metropolis(delta, u)
        if ok:
            x, phi, g, v_last = x1, phi1, g1, v1
        else:
            v_last = -v0
        j = it - warmup
        if j >= 0:
            positions[j] = x
            accepted[j] = ok
            deltas[j] = delta
    return ChainResult(positions, accepted, deltas, evals, PhaseState(x.copy(), v_last),
                       np.full(n, L), h, "malt", warmup)


# ---------------------------------------------------------------------------
# GHMC / HMC / MALA
# ---------------------------------------------------------------------------

def _leapfrog_kernel(target, x, g, v, h, L):
    hh = 0.5 * h
    for _ in range(L):
        v = v - hh * g
        x = x + h * v
        phi, g = target.value_and_grad(x)
        v = v - hh * g
    return x, phi, g, v


def ghmc_run(target, config: SamplerConfig, stream: Optional[RngStream] = None, x0=None,
             warmup: Optional[int] = None, v0=None) -> ChainResult:
    """Generalized HMC: partial refresh with persistence alpha, leapfrog, flip on rejection."""
    stream = RngStream(config.seed) if stream is None else stream
    n = config.n_samples
    x, warmup = _initial_position(target, stream, x0, warmup, n)
    d = target.dim
    L, h, alpha = config.steps, config.h, config.alpha
    beta = math.sqrt(1.0 - alpha * alpha)
    v = np.zeros(d) if v0 is None else np.asarray(v0, dtype=float).copy()
    phi, g = target.value_and_grad(x)
    evals = 1
    positions = np.empty((n, d))
    accepted = np.zeros(n, dtype=bool)
    deltas = np.empty(n)
    for it in range(warmup + n):
        vp = alpha * v + beta * stream.standard_normal(d)
        x1, phi1, g1, v1 = _leapfrog_kernel(target, x, g, vp, h, L)
        evals += L
        delta = float(phi1 - phi + 0.5 * (_sq(v1) - _sq(vp)))
        ok = _metropolis(delta, stream.uniform())
        if ok:
            x, phi, g, v = x1, phi1, g1, v1
        else:
            v = -vp
        j = it - warmup
        if j >= 0:
            positions[j] = x
            accepted[j] = ok
            deltas[j] = delta
    return ChainResult(positions, accepted, deltas, evals, PhaseState(x.copy(), v.copy()),
                       np.full(n, L), h, "ghmc", warmup)


def hmc_run(target, config: SamplerConfig, stream=None, **kw) -> ChainResult:
    cfg = SamplerConfig(**{**config.__dict__, "alpha": 0.0})
    res = ghmc_run(target, cfg, stream, **kw)
    res.sampler = "hmc"
    return res


def mala_run(target, config: SamplerConfig, stream=None, **kw) -> ChainResult:
    cfg = SamplerConfig(**{**config.__dict__, "alpha": 0.0, "L": 1})
    res = ghmc_run(target, cfg, stream, **kw)
    res.sampler = "mala"
    return res


# ---------------------------------------------------------------------------
# Randomized HMC
# ---------------------------------------------------------------------------

def rhmc_steps(tau: float, h: float) -> int:
    return int(math.floor(tau / h))


def _draw_rhmc_steps(stream, mean_T, h, policy):
    while True:
        tau = stream.exponential(1.0 / mean_T)
        L = rhmc_steps(tau, h)
        if L >= 1:
            return tau, L
        if policy == "clamp":
            return tau, 1


def rhmc_run(target, config: SamplerConfig, stream: Optional[RngStream] = None, x0=None,
             warmup: Optional[int] = None, exact_flow: bool = False) -> ChainResult:
    """Randomized HMC with Exp(mean T) integration times.

    ``config.alpha`` sets the velocity persistence (0 is full refreshment).
    With ``exact_flow`` on a diagonal Gaussian the Hamiltonian flow is applied
    in closed form over tau and every proposal is accepted.
    """
    stream = RngStream(config.seed) if stream is None else stream
    n = config.n_samples
    x, warmup = _initial_position(target, stream, x0, warmup, n)
    d = target.dim
    h, alpha, mean_T = config.h, config.alpha, config.T
    beta = math.sqrt(1.0 - alpha * alpha)
    if exact_flow:
        if getattr(target, "precision", None) is None:
            raise ValueError("exact-flow RHMC needs a diagonal Gaussian target")
        freq = np.sqrt(target.precision)
    v = stream.standard_normal(d) if alpha > 0 else np.zeros(d)
    phi, g = target.value_and_grad(x)
    evals = 1
    positions = np.empty((n, d))
    accepted = np.zeros(n, dtype=bool)
    deltas = np.empty(n)
    steps = np.empty(n, dtype=int)
    for it in range(warmup + n):
        if exact_flow:
            tau = stream.exponential(1.0 / mean_T)
            L = 0
        else:
            tau, L = _draw_rhmc_steps(stream, mean_T, h, config.zero_policy)
        vp = alpha * v + beta * stream.standard_normal(d)
        if exact_flow:
            cs, sn = np.cos(freq * tau), np.sin(freq * tau)
            x1 = cs * x + sn * vp / freq
            v1 = -sn * freq * x + cs * vp
            delta, ok = 0.0, True
            stream.uniform()
            x, v = x1, v1
        else:
            x1, phi1, g1, v1 = _leapfrog_kernel(target, x, g, vp, h, L)
            evals += L
            delta = float(phi1 - phi + 0.5 * (_sq(v1) - _sq(vp)))
            ok = _metropolis(delta, stream.uniform())
            if ok:
                x, phi, g, v = x1, phi1, g1, v1
            else:
                v = -vp
        j = it - warmup
        if j >= 0:
            positions[j] = x
            accepted[j] = ok
            deltas[j] = delta
            steps[j] = L
    return ChainResult(positions, accepted, deltas, evals, PhaseState(x.copy(), v.copy()),
                       steps, h, "rhmc", warmup)


# ---------------------------------------------------------------------------
# Exact autoregressive references for diagonal Gaussians
# ---------------------------------------------------------------------------

def _exact_result(positions, last_v, name):
    n = positions.shape[0]
    return ChainResult(positions, np.ones(n, dtype=bool), np.zeros(n), 0,
                       PhaseState(positions[-1].copy(), last_v), np.zeros(n, dtype=int), float("nan"), name, 0)


def exact_langevin_ar_run(scales, gamma: float, T: float, n_samples: int,
                          stream: Optional[RngStream] = None) -> ChainResult:
    """MALT in the h -> 0 limit: full velocity refresh, then the exact Langevin flow over T."""
    stream = RngStream(0) if stream is None else stream
    scales = np.asarray(scales, dtype=float)
    d = scales.size
    x = stream.standard_normal(d) * scales
    positions = np.empty((n_samples, d))
    v = np.zeros(d)
    for j in range(n_samples):
        state = ou_exact_step(scales, gamma, T, PhaseState(x, stream.standard_normal(d)), stream)
        x, v = state.x, state.v
        positions[j] = x
    return _exact_result(positions, v, "langevin-ar")


def langevin_ar_coefficients(scales, gamma: float, T: float):
    """(rho_i, c_i) so that X^n = rho X^{n-1} + c xi exactly."""
    scales = np.asarray(scales, dtype=float)
    rho = np.array([matexp_2x2(s, gamma, T)[0, 0] for s in scales])
    return rho, scales * np.sqrt(np.maximum(1.0 - rho * rho, 0.0))


def exact_rhmc_ar_run(scales, mean_T: float, n_samples: int, stream: Optional[RngStream] = None) -> ChainResult:
    """Y^n = cos(tau/s) Y^{n-1} + s sin(tau/s) xi, tau ~ Exp(mean mean_T) shared by all coordinates."""
    if not mean_T > 0:
        raise ValueError("mean integration time must be positive")
    stream = RngStream(0) if stream is None else stream
    scales = np.asarray(scales, dtype=float)
    d = scales.size
    y = stream.standard_normal(d) * scales
    positions = np.empty((n_samples, d))
    for j in range(n_samples):
        tau = stream.exponential(1.0 / mean_T)
        xi = stream.standard_normal(d)
        y = np.cos(tau / scales) * y + scales * np.sin(tau / scales) * xi
        positions[j] = y
    return _exact_result(positions, np.zeros(d), "rhmc-ar")


SAMPLERS = {"malt": malt_run, "ghmc": ghmc_run, "hmc": hmc_run, "mala": mala_run, "rhmc": rhmc_run}


def run_sampler(name: str, target, config: SamplerConfig, stream=None, **kw) -> ChainResult:
    try:
        fn = SAMPLERS[name]
    except KeyError:
        raise ValueError(f"unknown sampler {name!r}; expected one of {sorted(SAMPLERS)}") from None
    return fn(target, config, stream, **kw)


def warn_low_acceptance(result: ChainResult, floor: float = 0.05):
    if result.acceptance_rate < floor:
        warnings.warn(f"{result.sampler}: acceptance {result.acceptance_rate:.3f} below {floor}", RuntimeWarning)
