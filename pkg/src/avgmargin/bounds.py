"""Margin-based generalization bound and Rademacher estimates for linear classes.

The bound, for h with sup |h| <= c, reads

    L(h) <= zeta (1 - J/c) + (1 - zeta) K_gamma + 4 R/gamma
            + sqrt(log(log2(4c/gamma)) / n) + sqrt(log(1/delta) / (2n))

with J the average training margin and K_gamma the fraction of training
margins at most gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Dataset, LinearModel, MarginStats, accuracy, margin_stats
from .errors import InvalidInputError
from .trainers import TrainConfig, fit


@dataclass(frozen=True)
class BoundInputs:
    zeta: float
    delta: float
    gamma: float
    c: float
    rademacher: float
    n: int

    def __post_init__(self):
        if not (0.0 <= self.zeta <= 1.0):
            raise InvalidInputError(f"zeta must lie in [0, 1], got {self.zeta}")
        if not (0.0 < self.delta < 1.0):
            raise InvalidInputError(f"delta must lie in (0, 1), got {self.delta}")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise InvalidInputError(f"c must be a positive real, got {self.c}")
        if not (0.0 < self.gamma <= self.c):
            raise InvalidInputError(f"gamma must lie in (0, c] = (0, {self.c}], got {self.gamma}")
        if not self.rademacher >= 0:
            raise InvalidInputError(f"rademacher complexity must be nonnegative, got {self.rademacher}")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidInputError(f"n must be a positive integer, got {self.n}")


def complexity_terms(inputs: BoundInputs) -> float:
    """The three terms that do not depend on the margin statistics."""
    n = inputs.n
    iterated = math.log(math.log2(4.0 * inputs.c / inputs.gamma))
    return (4.0 * inputs.rademacher / inputs.gamma + math.sqrt(iterated / n)
            + math.sqrt(math.log(1.0 / inputs.delta) / (2.0 * n)))


def bound_rhs(stats: MarginStats, inputs: BoundInputs) -> float:
    J = stats.average_margin
    if abs(J) > inputs.c * (1.0 + 1e-12):
        raise InvalidInputError(f"average margin {J:g} exceeds the score bound c = {inputs.c:g}")
    if inputs.gamma in stats.mistake_fraction:
        K = stats.mistake_fraction[inputs.gamma]
    else:
        K = float(np.count_nonzero(stats.margins <= inputs.gamma)) / len(stats.margins)
    z = inputs.zeta
    return z * (1.0 - J / inputs.c) + (1.0 - z) * K + complexity_terms(inputs)


@dataclass(frozen=True)
class RademacherEstimate:
    value: float
    mc_draws: int
    std_error: float


def rademacher_linear(data: Dataset, norm_bound: float, mc_draws: int = 1000, seed: int = 0) -> RademacherEstimate:
    """Monte-Carlo (B/n) E ||sum_i sigma_i x_i|| over uniform sign vectors."""
    if not (norm_bound > 0 and math.isfinite(norm_bound)):
        raise InvalidInputError(f"norm_bound must be a positive real, got {norm_bound}")
    if int(mc_draws) != mc_draws or mc_draws < 1:
        raise InvalidInputError(f"mc_draws must be a positive integer, got {mc_draws}")
    rng = np.random.default_rng(seed)
    sigma = rng.integers(0, 2, size=(int(mc_draws), data.n)) * 2.0 - 1.0
    draws = np.linalg.norm(sigma @ data.features, axis=1) * (norm_bound / data.n)
    se = float(draws.std(ddof=1) / math.sqrt(mc_draws)) if mc_draws > 1 else 0.0
    return RademacherEstimate(float(draws.mean()), int(mc_draws), se)


def _augmented(data: Dataset) -> Dataset:
    return Dataset(np.hstack([data.features, np.ones((data.n, 1))]), data.labels)


@dataclass(frozen=True)
class BoundTrial:
    test_error: float
    rhs: float
    rhs_zeta0: float
    rhs_zeta1: float
    c: float
    gamma: float
    rademacher: float
    rademacher_se: float


@dataclass(frozen=True)
class BoundCheckReport:
    holds_fraction: float
    trials: tuple
    note: str = ("heuristic check: c is the empirical max |h(x)| over the training and evaluation "
                 "samples, and the norm budget B is the trained model's norm")


def bound_check(distribution, config: TrainConfig, zeta: float, delta: float, n: int, trials: int,
                seed: int = 0, eval_size: int = 10_000, gamma: Optional[float] = None,
                mc_draws: int = 200, rademacher: Optional[float] = None) -> BoundCheckReport:
    """Fraction of trials in which the test error stays below the bound.

    ``distribution`` needs ``sample(n, rng) -> Dataset``. Per trial: train on n
    fresh points, measure error on ``eval_size`` more, and evaluate the bound
    with gamma defaulting to the median training margin. ``rademacher``
    overrides the Monte-Carlo estimate.
    """
    if int(trials) != trials or trials < 1:
        raise InvalidInputError(f"trials must be a positive integer, got {trials}")
    results = []
    for t, child in enumerate(np.random.SeedSequence([int(seed), 0]).spawn(int(trials))):
        rng = np.random.default_rng(child)
        train = distribution.sample(n, rng)
        test = distribution.sample(eval_size, rng)
        model: LinearModel = fit(train, config).model
        err = 1.0 - accuracy(model, test)
        scores = np.concatenate([model.decision_function(train.features), model.decision_function(test.features)])
        c = float(np.max(np.abs(scores)))
        stats = margin_stats(model, train)
        g = float(np.median(stats.margins)) if gamma is None else float(gamma)
        g = min(max(g, 1e-9 * c), c)
        if rademacher is None:
            B = float(np.linalg.norm(np.append(model.beta, model.intercept)))
            est = rademacher_linear(_augmented(train), B, mc_draws, seed=int(child.generate_state(1)[0]))
            R, se = est.value, est.std_error
        else:
            R, se = float(rademacher), 0.0
        rhs = {}
        for z in (zeta, 0.0, 1.0):
            rhs[z] = bound_rhs(stats, BoundInputs(z, delta, g, c, R, n))
        results.append(BoundTrial(err, rhs[zeta], rhs[0.0], rhs[1.0], c, g, R, se))
    holds = sum(1 for r in results if r.test_error <= r.rhs) / len(results)
    return BoundCheckReport(holds, tuple(results))
