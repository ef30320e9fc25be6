"""Four-atom training sample where average-margin training beats max-margin."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import Dataset
from ..errors import InvalidInputError


@dataclass(frozen=True)
class Prop1Config:
    k: int = 1
    condition_event_b: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidInputError(f"k must be a positive integer, got {self.k}")


def draw_switches(config: Prop1Config) -> np.ndarray:
    if config.condition_event_b:
        return np.ones(config.k)
    rng = np.random.default_rng(config.seed)
    return np.where(rng.random(config.k) < 0.5, 1.0, -1.0)


def gen_prop1(config: Prop1Config) -> Dataset:
    """n = 4k points, labels alternating +1, -1.

    The first k pairs are (1, 2a)/(−1, −2a) for a fair sign a (a = +1 under the
    conditioning event); the last k pairs are the anchors (10, 0)/(−10, 0).
    """
    a = draw_switches(config)
    rows = []
    for ai in a:
        rows += [(1.0, 2.0 * ai), (-1.0, -2.0 * ai)]
    for _ in range(config.k):
        rows += [(10.0, 0.0), (-10.0, 0.0)]
    labels = np.tile([1.0, -1.0], 2 * config.k)
    return Dataset(np.array(rows), labels)
