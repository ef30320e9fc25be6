"""Two classes living near random m-dimensional subspaces of R^d.

For label +1 a sample is ``P mu + U v + noise`` with ``P = U U^T``,
``v ~ N(U^T mu, I_m)`` and ``noise ~ N(0, eps I_d)``; label -1 mirrors this
with its own ``U`` and ``mu``. Each ``U`` is the orthonormal QR factor of a
d x m standard normal matrix and each ``mu`` has Uniform(0, 2) entries.

Randomness comes from ``numpy.random.default_rng`` (PCG64).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Dataset
from ..errors import InvalidInputError


@dataclass(frozen=True)
class SyntheticConfig:
    d: int = 200
    m: int = 5
    eps: float = 0.01
    n: int = 50
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.m <= self.d):
            raise InvalidInputError(f"need 1 <= m <= d, got m={self.m}, d={self.d}")
        if self.n < 2:
            raise InvalidInputError(f"need n >= 2, got {self.n}")
        if not (self.eps >= 0 and math.isfinite(self.eps)):
            raise InvalidInputError(f"eps must be nonnegative, got {self.eps}")


@dataclass(frozen=True)
class SubspaceDistribution:
    bases: tuple  # (U_pos, U_neg), each d x m with orthonormal columns
    offsets: tuple  # (mu_pos, mu_neg)
    eps: float

    @property
    def d(self) -> int:
        return self.bases[0].shape[0]

    def class_mean(self, label: int) -> np.ndarray:
        k = 0 if label > 0 else 1
        U, mu = self.bases[k], self.offsets[k]
        return 2.0 * U @ (U.T @ mu)

    def _draw(self, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
        U, mu = self.bases[k], self.offsets[k]
        coord = U.T @ mu
        v = coord[None, :] + rng.standard_normal((count, U.shape[1]))
        noise = math.sqrt(self.eps) * rng.standard_normal((count, U.shape[0]))
        return (U @ coord)[None, :] + v @ U.T + noise

    def sample(self, n: int, rng: np.random.Generator) -> Dataset:
        """Balanced draw: ceil(n/2) positives followed by the negatives."""
        n_pos = (n + 1) // 2
        X = np.vstack([self._draw(0, n_pos, rng), self._draw(1, n - n_pos, rng)])
        y = np.concatenate([np.ones(n_pos), -np.ones(n - n_pos)])
        return Dataset(X, y)


def make_distribution(d: int, m: int, eps: float, rng: np.random.Generator) -> SubspaceDistribution:
    if not (1 <= m <= d):
        raise InvalidInputError(f"need 1 <= m <= d, got m={m}, d={d}")
    bases, offsets = [], []
    for _ in range(2):
        Q, _r = np.linalg.qr(rng.standard_normal((d, m)))
        bases.append(Q)
        offsets.append(rng.uniform(0.0, 2.0, size=d))
    return SubspaceDistribution(tuple(bases), tuple(offsets), float(eps))


def gen_synthetic(config: SyntheticConfig) -> Dataset:
    rng = np.random.default_rng(config.seed)
    dist = make_distribution(config.d, config.m, config.eps, rng)
    return dist.sample(config.n, rng)
