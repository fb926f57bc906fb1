"""Counter-based, splittable random streams.

Each stream is a Philox4x64 generator keyed by ``(seed, stream_id)``. Every
scalar draw consumes exactly one 64-bit word, whatever its kind, so the
position of a draw in the stream only depends on how many draws preceded it.
Normals come from the inverse CDF rather than a rejection method for the
same reason.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
_TWO_M52 = 2.0**-52


def uniform_from_bits(bits: np.ndarray) -> np.ndarray:
    """Map raw 64-bit words to doubles in the open interval (0, 1).

    52 bits plus a half-ulp offset keep the largest value at 1 - 2^-53, which
    is exactly representable (53 bits would round up to 1.0).
    """
    return ((bits >> np.uint64(12)).astype(np.float64) + 0.5) * _TWO_M52


def exponential_icdf(u, rate: float = 1.0):
    """Inverse CDF of the exponential law with the given rate."""
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    return -np.log1p(-np.asarray(u, dtype=float)) / rate


class RngStream:
    """A single-owner random stream identified by ``(seed, stream_id)``.

    ``counter`` counts the 64-bit words consumed so far.
    """

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = int(seed) & MASK64
        self.stream_id = int(stream_id) & MASK64
        self.counter = 0
        self._bits = np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"

    def _raw(self, n: int) -> np.ndarray:
        self.counter += n
        return self._bits.random_raw(n)

    @staticmethod
    def _count(size) -> int:
        if size is None:
            return 1
        if isinstance(size, (int, np.integer)):
            return int(size)
        return int(np.prod(size))

    def _draw(self, size, transform):
        n = self._count(size)
        out = transform(uniform_from_bits(self._raw(n)))
        if size is None:
            return float(out[0])
        return out.reshape(size)

    def uniform(self, size=None):
        return self._draw(size, lambda u: u)

    def standard_normal(self, size=None):
        return self._draw(size, ndtri)

    def exponential(self, rate: float = 1.0, size=None):
        if not rate > 0:
            raise ValueError(f"rate must be positive, got {rate}")
        return self._draw(size, lambda u: exponential_icdf(u, rate))

    def split(self, n: int) -> list["RngStream"]:
        """Children ``stream_id * n + j + 1`` for ``j < n``; the parent is untouched."""
        if n < 1:
            raise ValueError(f"split needs n >= 1, got {n}")
        return [RngStream(self.seed, (self.stream_id * n + j + 1) & MASK64) for j in range(n)]

    def spawn_one(self) -> "RngStream":
        return self.split(1)[0]


def lag0_correlation(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a) - np.mean(a)
    b = np.asarray(b) - np.mean(b)
    return float(np.dot(a, b) / math.sqrt(np.dot(a, a) * np.dot(b, b)))
