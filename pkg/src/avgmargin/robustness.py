"""Adversarial error under l2-bounded perturbations.

A point counts as an error once some perturbation of norm <= e brings its
margin y h(x + delta) to zero or below, so an adversary that reaches the
decision boundary wins. Without any budget (or against a constant score) a
point is an error exactly when ``predict`` gets it wrong, which differs from
the margin rule only for y = -1 at score exactly 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import Dataset, KernelModel, LinearModel
from .errors import InvalidInputError, UndefinedDirectionError

GRADIENT_STEPS = 20


@dataclass(frozen=True)
class AttackBudget:
    """Euclidean perturbation budget."""

    magnitude: float

    def __post_init__(self):
        if not (self.magnitude >= 0 and math.isfinite(self.magnitude)):
            raise InvalidInputError(f"budget must be a finite nonnegative real, got {self.magnitude}")
        object.__setattr__(self, "magnitude", float(self.magnitude))


def _budget(budget) -> float:
    if isinstance(budget, AttackBudget):
        return budget.magnitude
    return AttackBudget(float(budget)).magnitude


def _plain_errors(scores: np.ndarray, labels: np.ndarray) -> np.ndarray:
    # sign(0) = -1
    return np.where(scores > 0.0, 1.0, -1.0) != labels


def _linear_errors(scores, labels, norm: float, e: float) -> int:
    if e == 0.0 or norm == 0.0:
        return int(np.count_nonzero(_plain_errors(scores, labels)))
    return int(np.count_nonzero(labels * scores - e * norm <= 0.0))


def robust_error_linear(model: LinearModel, data: Dataset, budget) -> float:
    """Exact worst-case error: the attack -e y beta/||beta|| lowers every margin by e ||beta||."""
    e = _budget(budget)
    if model.d != data.d:
        raise InvalidInputError(f"model has {model.d} features, data has {data.d}")
    norm = float(np.linalg.norm(model.beta))
    if norm == 0.0:
        raise UndefinedDirectionError("robust error is undefined for a zero weight vector")
    scores = model.decision_function(data.features)
    return _linear_errors(scores, data.labels, norm, e) / data.n


def robust_accuracy_linear(model: LinearModel, data: Dataset, budgets: Sequence[float]) -> List[float]:
    """1 - robust error at each budget.

    A zero weight vector cannot be attacked, so its accuracy is the plain one at every budget.
    """
    if model.d != data.d:
        raise InvalidInputError(f"model has {model.d} features, data has {data.d}")
    scores = model.decision_function(data.features)
    norm = float(np.linalg.norm(model.beta))
    return [1.0 - _linear_errors(scores, data.labels, norm, _budget(e)) / data.n for e in budgets]


def _point_seed(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def robust_error_kernel(model: KernelModel, data: Dataset, budget, samples: int = 100, seed: int = 0,
                        extra_directions=None) -> float:
    """Sampled attack on a kernel model; a LOWER bound on the true robust error.

    A point is counted when it is already misclassified, when 20 steps of
    projected normalized-gradient descent on its margin cross zero, or when
    any of ``samples`` random directions scaled to the budget does.
    ``extra_directions`` (rows) are tried as well, scaled to the budget.
    """
    e = _budget(budget)
    if samples < 1:
        raise InvalidInputError(f"samples must be at least 1, got {samples}")
    if model.d != data.d:
        raise InvalidInputError(f"model has {model.d} features, data has {data.d}")
    extra = None
    if extra_directions is not None:
        extra = np.atleast_2d(np.asarray(extra_directions, dtype=np.float64))
        norms = np.linalg.norm(extra, axis=1, keepdims=True)
        extra = extra / np.where(norms > 0, norms, 1.0)
    weights = model.weights
    sv = model.support_features
    errors = 0
    for i in range(data.n):
        x, y = data.features[i], data.labels[i]

        def margin(points):
            return y * model.decision_function(points)

        if _plain_errors(model.decision_function(x), y)[0]:
            errors += 1
            continue
        if e == 0.0:
            continue
        delta = np.zeros(data.d)
        hit = False
        step = e / 4.0
        for _ in range(GRADIENT_STEPS):
            grad = y * (weights @ model.kernel.gradient(sv, x + delta))
            gnorm = float(np.linalg.norm(grad))
            if gnorm == 0.0:
                break
            delta = delta - step * grad / gnorm
            dn = float(np.linalg.norm(delta))
            if dn > e:
                delta *= e / dn
            if margin(x + delta)[0] <= 0.0:
                hit = True
                break
        if not hit:
            rng = _point_seed(seed, i)
            dirs = rng.standard_normal((samples, data.d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            if extra is not None:
                dirs = np.vstack([dirs, extra])
            hit = bool((margin(x[None, :] + e * dirs) <= 0.0).any())
        errors += hit
    return errors / data.n


# -- exact error curves on the four-atom test distribution --------------------

PROP1_ATOMS = (
    ((10.0, 0.0), 1.0, 0.25),
    ((-10.0, 0.0), -1.0, 0.25),
    ((1.0, 2.0), 1.0, 0.125),
    ((1.0, -2.0), 1.0, 0.125),
    ((-1.0, -2.0), -1.0, 0.125),
    ((-1.0, 2.0), -1.0, 0.125),
)


@dataclass(frozen=True)
class RobustCurve:
    """Right-continuous step function: ``levels[k]`` holds on [breakpoints[k-1], breakpoints[k])."""

    breakpoints: tuple
    levels: tuple

    def __post_init__(self):
        bps = tuple(float(b) for b in self.breakpoints)
        lv = tuple(float(v) for v in self.levels)
        if len(lv) != len(bps) + 1:
            raise InvalidInputError("levels must have exactly one more entry than breakpoints")
        if any(b < 0 for b in bps) or any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])):
            raise InvalidInputError("breakpoints must be nonnegative and strictly increasing")
        if any(v < 0 or v > 1 for v in lv) or any(v2 < v1 for v1, v2 in zip(lv, lv[1:])):
            raise InvalidInputError("levels must lie in [0, 1] and be nondecreasing")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "levels", lv)

    def __call__(self, e: float) -> float:
        k = sum(1 for b in self.breakpoints if e >= b)
        return self.levels[k]


def curve_from_atoms(beta, atoms=PROP1_ATOMS, intercept: float = 0.0, rel_merge: float = 1e-12) -> RobustCurve:
    """Robust error of h(x) = x.beta + intercept on a finite distribution."""
    beta = np.asarray(beta, dtype=np.float64)
    norm = float(np.linalg.norm(beta))
    if norm == 0.0:
        raise UndefinedDirectionError("error curve is undefined for a zero weight vector")
    base = 0.0
    jumps = []
    for x, y, prob in atoms:
        m = y * (float(np.dot(x, beta)) + intercept)
        if m <= 0.0:
            base += prob
        else:
            jumps.append((m / norm, prob))
    jumps.sort()
    breakpoints, levels = [], [base]
    for dist, prob in jumps:
        if breakpoints and dist - breakpoints[-1] <= rel_merge * max(1.0, dist):
            levels[-1] += prob
        else:
            breakpoints.append(dist)
            levels.append(levels[-1] + prob)
    levels = [min(1.0, v) for v in levels]
    return RobustCurve(tuple(breakpoints), tuple(levels))


def prop1_error_curve(model: LinearModel) -> RobustCurve:
    """Exact L(h, e) on the four-atom distribution for a 2-D model without intercept."""
    if model.d != 2:
        raise InvalidInputError(f"the atom distribution is 2-D; model has {model.d} features")
    if model.intercept != 0.0:
        raise InvalidInputError("the atom distribution curve assumes a model without intercept")
    return curve_from_atoms(model.beta)


@dataclass(frozen=True)
class Region:
    start: float
    end: float
    relation: str  # "<", "=", ">" comparing curve a with curve b


def compare_curves(a: RobustCurve, b: RobustCurve, tol: float = 1e-12) -> List[Region]:
    """Maximal budget intervals [start, end) on which a < b, a = b or a > b."""
    cuts = sorted(set(a.breakpoints) | set(b.breakpoints))
    starts = [0.0] + [c for c in cuts if c > 0.0]
    regions: List[Region] = []
    for k, start in enumerate(starts):
        end = starts[k + 1] if k + 1 < len(starts) else math.inf
        diff = a(start) - b(start)
        rel = "=" if abs(diff) <= tol else ("<" if diff < 0 else ">")
        if regions and regions[-1].relation == rel:
            regions[-1] = Region(regions[-1].start, end, rel)
        else:
            regions.append(Region(start, end, rel))
    return regions
