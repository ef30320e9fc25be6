"""Trainers for the six linear classifiers and the AM kernel SVM."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import objectives, qp
from .core import Dataset, Hyperparams, KernelModel, KernelSpec, LinearModel
from .errors import DivergenceError, InvalidInputError
from .optim import OptimizerConfig, barrier_hinge, intercept_unbounded, newton_logistic, subgradient_hinge

METHODS = objectives.METHODS


@dataclass(frozen=True)
class TrainConfig:
    method: str = "l2"
    hyper: Hyperparams = field(default_factory=Hyperparams)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method {self.method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class TrainDiagnostics:
    final_objective: float
    hinge_values: np.ndarray
    objective_trace: tuple


@dataclass(frozen=True)
class FitResult:
    model: LinearModel
    diagnostics: TrainDiagnostics


def _check_intercept(data: Dataset, hyper: Hyperparams, mu: float) -> None:
    if hyper.fit_intercept and intercept_unbounded(data.labels, mu):
        raise DivergenceError(
            f"mu = {mu:g} makes the objective unbounded below in the intercept "
            f"({int((data.labels > 0).sum())} positive vs {int((data.labels < 0).sum())} negative labels)")


def _row_space(X: np.ndarray):
    """Orthonormal basis Q (d x n) of the rows of X when d > n, else None.

    Every objective except l1 depends on beta only through X beta and the
    rotation-invariant ||beta||, so its minimizer lies in span(rows of X) and
    solving over X Q is exact.
    """
    n, d = X.shape
    if d <= n:
        return None
    Q, _ = np.linalg.qr(X.T)
    return Q


def fit(data: Dataset, config: TrainConfig) -> FitResult:
    """Train ``config.method`` on ``data`` and report diagnostics."""
    method, hyper, opt = config.method, config.hyper, config.optimizer
    X, y = data.features, data.labels
    Q = _row_space(X) if method != "l1" else None
    Xs = X if Q is None else X @ Q

    def lift(beta):
        return beta if Q is None else Q @ beta

    if method == "logistic_am":
        _check_intercept(data, hyper, hyper.mu)
        res = newton_logistic(Xs, y, hyper.mu, hyper.lam, hyper.fit_intercept)
        model = LinearModel(lift(res.beta), res.intercept, hyper)
        final = objectives.logistic_am_objective(data, hyper, model.beta, model.intercept)
        yf = y * model.decision_function(X)
        losses = objectives.softplus(-yf)
        return FitResult(model, TrainDiagnostics(final, losses, tuple(res.trace)))

    terms = objectives.hinge_terms(method, data, hyper)
    _check_intercept(data, hyper, terms.mu)
    if opt.kind == "barrier":
        res = barrier_hinge(terms, Xs, y, gap_tol=opt.gap_tol)
    else:
        res = subgradient_hinge(terms, Xs, y, step0=opt.step0, iters=int(opt.iters), averaging=opt.averaging)
    model = LinearModel(lift(res.beta), res.intercept, hyper)
    final = objectives.hinge_objective(terms, data, model.beta, model.intercept)
    slacks = objectives.hinge_slacks(terms, data, model.beta, model.intercept)
    return FitResult(model, TrainDiagnostics(final, slacks, tuple(res.trace)))


def _train(method, data, config):
    return fit(data, replace(config, method=method)).model


def train_l2(data: Dataset, config: TrainConfig) -> LinearModel:
    """lam ||beta||^2 + mean hinge."""
    return _train("l2", data, config)


def train_am(data: Dataset, config: TrainConfig) -> LinearModel:
    """lam ||beta||^2 + mean hinge - mu * mean margin."""
    return _train("am", data, config)


def train_l1(data: Dataset, config: TrainConfig) -> LinearModel:
    return _train("l1", data, config)


def train_adversarial(data: Dataset, config: TrainConfig) -> LinearModel:
    """Hinge against worst-case l2 perturbations of size gamma: (1 - y f + gamma ||beta||)_+."""
    return _train("adversarial", data, config)


def train_song(data: Dataset, config: TrainConfig) -> LinearModel:
    """Hinge shifted by gamma times the squared distance to the point's class centroid."""
    return _train("song", data, config)


def train_logistic_am(data: Dataset, config: TrainConfig) -> LinearModel:
    return _train("logistic_am", data, config)


TRAINERS = {
    "l2": train_l2,
    "l1": train_l1,
    "am": train_am,
    "adversarial": train_adversarial,
    "song": train_song,
    "logistic_am": train_logistic_am,
}


def train_am_kernel(data: Dataset, kernel: KernelSpec, config: TrainConfig,
                    tol: float = qp.DEFAULT_TOL, max_iter: int = qp.DEFAULT_MAX_ITER) -> KernelModel:
    """AM-regularized kernel SVM through the dual solver."""
    problem = qp.DualProblem.from_data(data, kernel, config.hyper)
    solution = qp.solve_dual(problem, tol=tol, max_iter=max_iter)
    return qp.recover_primal(problem, solution, data, kernel, config.hyper)


def prop1_am_mu(lam: float, k: int) -> float:
    """Trainer-scale mu equivalent to the hand-derived threshold lam / (15 k).

    That threshold weights the margin sum without the 1/n average, so the
    mean-margin weight used here is n times larger with n = 4k.
    """
    n = 4 * k
    return n * lam / (15 * k)
