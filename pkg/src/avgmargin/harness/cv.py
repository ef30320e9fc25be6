"""k-fold cross-validation over a hyperparameter grid."""

from __future__ import annotations

import math
from typing import Iterable, Sequence, Tuple

import numpy as np

from ..core import Dataset, Hyperparams, accuracy
from ..errors import ConfigError, ConvergenceError, DivergenceError, InvalidInputError
from ..trainers import TrainConfig, fit


def fold_indices(n: int, folds: int, seed: int):
    """Seeded shuffle cut into ``folds`` nearly equal parts."""
    if not (2 <= folds <= n):
        raise ConfigError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    perm = np.random.default_rng(np.random.SeedSequence([int(seed), 1])).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _preference(point: Tuple[float, float, float]):
    lam, mu, gamma = point
    return (-lam, mu, gamma)


def cross_validate(data: Dataset, method: str, grid: Iterable[Sequence[float]], folds: int = 5, seed: int = 0,
                   fit_intercept: bool = True) -> Hyperparams:
    """Grid point with the best mean validation accuracy.

    ``grid`` holds (lam, mu, gamma) triples. Ties go to the larger lam, then
    the smaller mu, then the smaller gamma. Points whose fits diverge on some
    fold are dropped.
    """
    points = [tuple(float(v) for v in p) for p in grid]
    if not points:
        raise ConfigError("empty hyperparameter grid")
    for lam, mu, gamma in points:
        Hyperparams(lam=lam, mu=mu, gamma=gamma, fit_intercept=fit_intercept)
    parts = fold_indices(data.n, folds, seed)
    if len(points) == 1:
        lam, mu, gamma = points[0]
        return Hyperparams(lam=lam, mu=mu, gamma=gamma, fit_intercept=fit_intercept)

    everything = np.arange(data.n)
    splits = []
    for part in parts:
        train = data.subset(np.setdiff1d(everything, part))
        splits.append((train, data.subset(part)))

    best, best_key = None, None
    for point in sorted(points, key=_preference):
        lam, mu, gamma = point
        hyper = Hyperparams(lam=lam, mu=mu, gamma=gamma, fit_intercept=fit_intercept)
        scores = []
        try:
            for train, valid in splits:
                model = fit(train, TrainConfig(method, hyper)).model
                scores.append(accuracy(model, valid))
        except (DivergenceError, ConvergenceError, InvalidInputError):
            continue
        score = math.fsum(scores) / len(scores)
        # strict improvement only, so the earlier (preferred) point keeps ties
        if best_key is None or score > best_key:
            best, best_key = hyper, score
    if best is None:
        raise ConfigError(f"every grid point failed to train for method {method!r}")
    return best
