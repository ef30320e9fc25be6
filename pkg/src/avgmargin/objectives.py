"""Training objectives for every linear method.

All hinge-type methods share one form:

    ridge ||beta||^2 + l1 ||beta||_1 + mean_i (a_i - y_i f_i + adv ||beta||_2)_+ - mu mean_i y_i f_i

with f_i = x_i.beta + b. The logistic variant swaps the hinge for softplus(-y_i f_i).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, Hyperparams
from .errors import InvalidInputError, MissingCentroidError

METHODS = ("l2", "l1", "am", "adversarial", "song", "logistic_am")


@dataclass(frozen=True)
class HingeTerms:
    """Coefficients of the shared hinge-family objective."""

    ridge: float
    l1: float
    mu: float
    adv: float
    targets: np.ndarray
    fit_intercept: bool


def class_centroids(data: Dataset):
    pos = data.labels > 0
    if pos.all() or not pos.any():
        raise MissingCentroidError("centroid-shifted training needs both classes in the training data")
    return data.features[pos].mean(0), data.features[~pos].mean(0)


def centroid_shifts(data: Dataset) -> np.ndarray:
    """||x_i - centroid(y_i)||^2 for every training point."""
    c_pos, c_neg = class_centroids(data)
    centers = np.where(data.labels[:, None] > 0, c_pos[None, :], c_neg[None, :])
    diff = data.features - centers
    return (diff * diff).sum(1)


def hinge_terms(method: str, data: Dataset, hyper: Hyperparams) -> HingeTerms:
    n = data.n
    ones = np.ones(n)
    lam, mu, gamma = hyper.lam, hyper.mu, hyper.gamma
    fi = hyper.fit_intercept
    if method == "l2":
        return HingeTerms(lam, 0.0, 0.0, 0.0, ones, fi)
    if method == "am":
        return HingeTerms(lam, 0.0, mu, 0.0, ones, fi)
    if method == "l1":
        return HingeTerms(0.0, lam, 0.0, 0.0, ones, fi)
    if method == "adversarial":
        return HingeTerms(lam, 0.0, 0.0, gamma, ones, fi)
    if method == "song":
        return HingeTerms(lam, 0.0, 0.0, 0.0, ones - gamma * centroid_shifts(data), fi)
    raise InvalidInputError(f"{method!r} is not a hinge-type method")


def hinge_objective(terms: HingeTerms, data: Dataset, beta, b: float = 0.0) -> float:
    beta = np.asarray(beta, dtype=np.float64)
    yf = data.labels * (data.features @ beta + b)
    norm = math.sqrt(float(beta @ beta))
    slack = np.maximum(0.0, terms.targets - yf + terms.adv * norm)
    value = terms.ridge * float(beta @ beta) + float(np.mean(slack)) - terms.mu * float(np.mean(yf))
    if terms.l1:
        value += terms.l1 * float(np.abs(beta).sum())
    return value


def hinge_slacks(terms: HingeTerms, data: Dataset, beta, b: float = 0.0) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    yf = data.labels * (data.features @ beta + b)
    return np.maximum(0.0, terms.targets - yf + terms.adv * math.sqrt(float(beta @ beta)))


def softplus(z):
    """log(1 + exp(z)), stable for large |z|."""
    z = np.asarray(z, dtype=np.float64)
    return np.logaddexp(0.0, z)


def logistic_am_objective(data: Dataset, hyper: Hyperparams, beta, b: float = 0.0) -> float:
    beta = np.asarray(beta, dtype=np.float64)
    yf = data.labels * (data.features @ beta + b)
    return (float(np.mean(softplus(-yf))) - hyper.mu * float(np.mean(yf))
            + hyper.lam * float(beta @ beta))


def objective(method: str, data: Dataset, hyper: Hyperparams, beta, b: float = 0.0) -> float:
    """Objective of ``method`` at (beta, b)."""
    if method == "logistic_am":
        return logistic_am_objective(data, hyper, beta, b)
    return hinge_objective(hinge_terms(method, data, hyper), data, beta, b)


def logistic_am_score_loss(h, y, mu: float) -> float:
    """Average-margin logistic loss written directly on scores h(x_i)."""
    h = np.asarray(h, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(softplus(-y * h)) - mu * np.mean(y * h))


def logistic_am_likelihood_form(h, y, mu: float) -> float:
    """The same loss as cross-entropy plus two log-likelihood-ratio terms.

    Uses t = (1 + y)/2, p1 = e^h/(1 + e^h), p0 = 1/(1 + e^h).
    """
    h = np.asarray(h, dtype=np.float64)
    t = (1.0 + np.asarray(y, dtype=np.float64)) / 2.0
    log_p1 = -softplus(-h)
    log_p0 = -softplus(h)
    cross_entropy = -np.mean(t * log_p1 + (1.0 - t) * log_p0)
    ratio_pos = -mu * np.mean(t * (log_p1 - log_p0))
    ratio_neg = -mu * np.mean((1.0 - t) * (log_p0 - log_p1))
    return float(cross_entropy + ratio_pos + ratio_neg)
