"""Target distributions pi(x) proportional to exp(-potential(x)).

All models accept positions of shape ``(..., d)`` so that batches of chains
or coupled pairs can be evaluated in one call.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaincinv

from .rng import RngStream


class TargetModel:
    """Base class: a potential, its gradient and optional metadata."""

    name = "target"

    def __init__(self, dim: int, convexity_bounds: Optional[tuple] = None, scales=None):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)
        if convexity_bounds is not None:
            m, M = convexity_bounds
            if not 0 < m <= M:
                raise ValueError(f"convexity bounds need 0 < m <= M, got {convexity_bounds}")
        self.convexity_bounds = convexity_bounds
        self.scales = None if scales is None else np.asarray(scales, dtype=float)

    def potential(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def value_and_grad(self, x):
        return self.potential(x), self.gradient(x)

    # Exact stationary draws and moments, when the model has them.
    def sample(self, stream: RngStream, n: Optional[int] = None):
        raise NotImplementedError(f"{self.name} has no exact sampler")

    def marginal_moments(self):
        """Per-coordinate (mean, variance), or None when not finite/known."""
        return None

    @property
    def has_exact_sampler(self) -> bool:
        return type(self).sample is not TargetModel.sample


def _positive_vector(values, what: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{what} must be a non-empty vector")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise ValueError(f"{what} must be positive, got {arr}")
    return arr


def _draw_shape(dim: int, n: Optional[int]):
    return (dim,) if n is None else (n, dim)


class DiagonalGaussian(TargetModel):
    name = "gaussian"

    def __init__(self, scales):
        scales = _positive_vector(scales, "scales")
        super().__init__(scales.size, (1.0 / scales.max() ** 2, 1.0 / scales.min() ** 2), scales)
        self.precision = 1.0 / scales**2

    def potential(self, x):
        x = np.asarray(x)
        return 0.5 * np.sum(x * x * self.precision, axis=-1)

    def gradient(self, x):
        return np.asarray(x) * self.precision

    def value_and_grad(self, x):
        g = np.asarray(x) * self.precision
        return 0.5 * np.sum(x * g, axis=-1), g

    def sample(self, stream, n=None):
        return stream.standard_normal(_draw_shape(self.dim, n)) * self.scales

    def marginal_moments(self):
        return np.zeros(self.dim), self.scales**2


class GaussianMixture(TargetModel):
    """Equal-weight mixture of N(a, Sigma) and N(-a, Sigma), Sigma diagonal."""

    name = "mixture"

    def __init__(self, a, variances):
        variances = _positive_vector(variances, "variances")
        a = np.atleast_1d(np.asarray(a, dtype=float))
        if a.shape != variances.shape:
            raise ValueError("a and variances must have the same length")
        self.a = a
        self.variances = variances
        self.b = a / variances
        self.a_norm_sq = float(np.sum(a * self.b))
        bounds = None
        if self.a_norm_sq < 1:
            bounds = ((1 - self.a_norm_sq) / variances.max(), 1.0 / variances.min())
        super().__init__(a.size, bounds, np.sqrt(variances))

    @staticmethod
    def _log1p_exp_neg(u2):
        # log(1 + exp(-u2)); logaddexp branches on the sign internally, so no overflow
        return np.logaddexp(0.0, -u2)

    def potential(self, x):
        x = np.asarray(x)
        r = x - self.a
        u = np.sum(x * self.b, axis=-1)
        return 0.5 * np.sum(r * r / self.variances, axis=-1) - self._log1p_exp_neg(2 * u)

    def gradient(self, x):
        x = np.asarray(x)
        u = np.sum(x * self.b, axis=-1)
        # -b + 2b / (1 + exp(2u)) collapses to -b tanh(u)
        return x / self.variances - np.asarray(np.tanh(u))[..., None] * self.b

    def value_and_grad(self, x):
        x = np.asarray(x)
        r = x - self.a
        u = np.sum(x * self.b, axis=-1)
        pot = 0.5 * np.sum(r * r / self.variances, axis=-1) - self._log1p_exp_neg(2 * u)
        return pot, x / self.variances - np.asarray(np.tanh(u))[..., None] * self.b

    def hessian_quadratic(self, x, direction):
        u = np.sum(np.asarray(x) * self.b, axis=-1)
        sech2 = 1.0 / np.cosh(u) ** 2
        return np.sum(direction**2 / self.variances, axis=-1) - sech2 * np.sum(direction * self.b, axis=-1) ** 2

    def sample(self, stream, n=None):
        z = stream.standard_normal(_draw_shape(self.dim, n)) * self.scales
        signs = np.where(np.asarray(stream.uniform(n)) < 0.5, -1.0, 1.0)
        return z + signs[..., None] * self.a

    def marginal_moments(self):
        return np.zeros(self.dim), self.variances + self.a**2


class StudentT(TargetModel):
    """Multivariate Student distribution with k degrees of freedom, scale Sigma diagonal."""

    name = "student"

    def __init__(self, dof: float, variances):
        if not dof >= 1:
            raise ValueError(f"degrees of freedom must be >= 1, got {dof}")
        variances = _positive_vector(variances, "variances")
        self.dof = float(dof)
        self.variances = variances
        super().__init__(variances.size, None, np.sqrt(variances))

    def potential(self, x):
        q = np.sum(np.asarray(x) ** 2 / self.variances, axis=-1)
        return 0.5 * (self.dof + self.dim) * np.log(self.dof + q)

    def gradient(self, x):
        x = np.asarray(x)
        q = np.sum(x * x / self.variances, axis=-1)
        coef = (self.dof + self.dim) / (self.dof + q)
        return x / self.variances * np.asarray(coef)[..., None]

    def value_and_grad(self, x):
        x = np.asarray(x)
        q = np.sum(x * x / self.variances, axis=-1)
        s = self.dof + q
        pot = 0.5 * (self.dof + self.dim) * np.log(s)
        return pot, x / self.variances * np.asarray((self.dof + self.dim) / s)[..., None]

    def sample(self, stream, n=None):
        z = stream.standard_normal(_draw_shape(self.dim, n)) * self.scales
        k = self.dof
        shape = None if n is None else (n,)
        # chi-square with k dof through the gamma inverse CDF; keeps one word per draw
        chi2 = 2.0 * gammaincinv(k / 2.0, np.asarray(stream.uniform(shape)))
        scale = np.sqrt(k / chi2)
        return z * (scale[..., None] if n is not None else scale)

    def marginal_moments(self):
        if self.dof <= 2:
            return None
        return np.zeros(self.dim), self.variances * self.dof / (self.dof - 2)


@dataclass(frozen=True)
class Marginal1DPotential:
    """One-dimensional potential phi with derivatives up to order three."""

    phi: Callable
    dphi: Callable
    d2phi: Callable
    d3phi: Callable
    name: str = "marginal"
    sampler: Optional[Callable] = field(default=None, compare=False)

    def draw(self, stream: RngStream, shape):
        if self.sampler is None:
            raise NotImplementedError(f"marginal {self.name} has no exact sampler")
        return self.sampler(stream, shape)


def standard_gaussian_marginal() -> Marginal1DPotential:
    return Marginal1DPotential(
        phi=lambda x: 0.5 * np.asarray(x) ** 2,
        dphi=lambda x: np.asarray(x, dtype=float),
        d2phi=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        d3phi=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        name="gaussian",
        sampler=lambda stream, shape: stream.standard_normal(shape),
    )


def logcosh_marginal(c: float = 0.5) -> Marginal1DPotential:
    """phi(x) = x^2/2 + c log cosh x; bounded derivatives of order 2 to 4."""
    if c < 0:
        raise ValueError("c must be non-negative")

    def sampler(stream, shape):
        # rejection from N(0,1): acceptance cosh(x)^-c
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        n = int(np.prod(shape))
        out = np.empty(n)
        filled = 0
        while filled < n:
            m = max(2 * (n - filled), 16)
            z = stream.standard_normal(m)
            u = stream.uniform(m)
            keep = z[u < np.cosh(z) ** (-c)]
            take = min(keep.size, n - filled)
            out[filled : filled + take] = keep[:take]
            filled += take
        return out.reshape(shape)

    def sech2(x):
        return 1.0 / np.cosh(x) ** 2

    return Marginal1DPotential(
        phi=lambda x: 0.5 * np.asarray(x) ** 2 + c * np.log(np.cosh(x)),
        dphi=lambda x: np.asarray(x) + c * np.tanh(x),
        d2phi=lambda x: 1.0 + c * sech2(x),
        d3phi=lambda x: -2.0 * c * sech2(x) * np.tanh(x),
        name=f"logcosh{c:g}",
        sampler=sampler,
    )


class ProductTarget(TargetModel):
    name = "product"

    def __init__(self, marginal: Marginal1DPotential, dim: int):
        super().__init__(dim)
        self.marginal = marginal

    def potential(self, x):
        return np.sum(self.marginal.phi(np.asarray(x)), axis=-1)

    def gradient(self, x):
        return self.marginal.dphi(np.asarray(x))

    def sample(self, stream, n=None):
        return self.marginal.draw(stream, _draw_shape(self.dim, n))


def heterogeneous_variances(d: int) -> np.ndarray:
    """sigma_i^2 = i / d for i = 1..d."""
    return np.arange(1, d + 1) / d


def diagonal_gaussian(scales) -> DiagonalGaussian:
    return DiagonalGaussian(scales)


def gaussian_mixture(a, variances) -> GaussianMixture:
    return GaussianMixture(a, variances)


def student_t(dof, variances) -> StudentT:
    return StudentT(dof, variances)


def product_target(marginal: Marginal1DPotential, d: int) -> ProductTarget:
    return ProductTarget(marginal, d)


def mixture_offsets(variances, a_norm: float) -> np.ndarray:
    """Offsets a_i proportional to sigma_i with |a|_{Sigma^-1} = a_norm."""
    variances = np.asarray(variances, dtype=float)
    return a_norm * np.sqrt(variances) / np.sqrt(variances.size)


def make_target(kind: str, d: int = 50, a_norm: float = 0.5, dof: float = 20.0, scales=None) -> TargetModel:
    """Build one of the named models on the heterogeneous-variance grid."""
    variances = heterogeneous_variances(d) if scales is None else np.asarray(scales, dtype=float) ** 2
    if kind == "gaussian":
        return DiagonalGaussian(np.sqrt(variances))
    if kind == "mixture":
        return GaussianMixture(mixture_offsets(variances, a_norm), variances)
    if kind == "student":
        return StudentT(dof, variances)
    raise ValueError(f"unknown target {kind!r}; expected gaussian, mixture or student")
