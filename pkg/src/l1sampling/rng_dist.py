"""Seeded random streams and the non-uniform variates the samplers need."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class RngStream:
    """One PCG64 stream per ``(seed, stream_id)``.

    Streams with different ``stream_id`` come from ``SeedSequence`` spawn keys,
    which numpy documents as statistically independent. PCG64 has period 2**128.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be nonnegative")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def standard_normal(self, shape) -> np.ndarray:
        return self.generator.standard_normal(shape)

    def uniform(self, shape=None):
        return self.generator.random(shape)


def sample_standard_normal_vec(rng: RngStream, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be at least 1")
    return rng.standard_normal(n)


def sample_inverse_gaussian(rng: RngStream, mean, shape, size=None):
    """Inverse-Gaussian draws by the Michael–Schucany–Haas transformation.

    ``mean`` and ``shape`` broadcast; ``size`` defaults to their broadcast shape.
    """
    mean = np.asarray(mean, dtype=float)
    shape = np.asarray(shape, dtype=float)
    if np.any(~(mean > 0)) or np.any(~(shape > 0)):
        raise ValueError("inverse-Gaussian parameters must be positive")
    if size is None:
        size = np.broadcast(mean, shape).shape
    nu = rng.standard_normal(size)
    r = mean * nu * nu / (2.0 * shape)
    # smaller root of the quadratic, written without cancellation:
    # mu (1 + r - sqrt(2r + r^2)) == mu / (1 + r + sqrt(2r + r^2))
    x = mean / (1.0 + r + np.sqrt(r * (2.0 + r)))
    u = rng.uniform(size)
    out = np.where(u <= mean / (mean + x), x, mean * mean / x)
    return out if np.ndim(out) else float(out)


def sample_gamma(rng: RngStream, shape_k, rate, size=None):
    shape_k = np.asarray(shape_k, dtype=float)
    rate = np.asarray(rate, dtype=float)
    if np.any(~(shape_k > 0)) or np.any(~(rate > 0)):
        raise ValueError("gamma parameters must be positive")
    out = rng.generator.gamma(shape_k, 1.0 / rate, size=size)
    return out if np.ndim(out) else float(out)
