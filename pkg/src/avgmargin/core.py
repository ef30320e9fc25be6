"""Domain types, margin statistics, prediction and model (de)serialization."""

from __future__ import annotations

import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    InvalidInputError,
    InvariantViolationError,
    ModelFormatError,
    UnknownVersionError,
)

FORMAT_VERSION = "1"


def _frozen_array(values, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise InvalidInputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _check_labels(labels: np.ndarray, name: str = "labels") -> None:
    bad = ~((labels == 1.0) | (labels == -1.0))
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise InvalidInputError(f"{name}[{idx}] = {labels[idx]!r}; labels must be +1 or -1")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``features`` (n x d) with labels in {+1, -1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = _frozen_array(self.features, 2, "features")
        y = _frozen_array(self.labels, 1, "labels")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError(f"dataset needs n >= 1 and d >= 1, got shape {X.shape}")
        if y.shape[0] != X.shape[0]:
            raise InvalidInputError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.isfinite(X).all():
            raise InvalidInputError("features contain non-finite values")
        _check_labels(y)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, index) -> "Dataset":
        return Dataset(self.features[index], self.labels[index])


@dataclass(frozen=True)
class Hyperparams:
    """Ridge weight ``lam``, average-margin weight ``mu`` and the method-specific ``gamma``.

    ``gamma`` is the centroid weight for Song-style training and the perturbation
    budget for adversarial training; other methods ignore it.
    """

    lam: float = 1e-2
    mu: float = 0.0
    gamma: float = 0.0
    fit_intercept: bool = True

    def __post_init__(self):
        for name in ("lam", "mu", "gamma"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise InvalidInputError(f"{name} must be a finite real, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.lam <= 0:
            raise InvalidInputError(f"lam must be positive, got {self.lam}")
        if self.mu < 0:
            raise InvalidInputError(f"mu must be nonnegative, got {self.mu}")
        if self.gamma < 0:
            raise InvalidInputError(f"gamma must be nonnegative, got {self.gamma}")
        object.__setattr__(self, "fit_intercept", bool(self.fit_intercept))

    def replace(self, **changes) -> "Hyperparams":
        values = dict(lam=self.lam, mu=self.mu, gamma=self.gamma, fit_intercept=self.fit_intercept)
        values.update(changes)
        return Hyperparams(**values)


@dataclass(frozen=True)
class LinearModel:
    """h(x) = x.beta + intercept."""

    beta: np.ndarray
    intercept: float = 0.0
    hyper: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        beta = _frozen_array(self.beta, 1, "beta")
        if beta.size < 1:
            raise InvalidInputError("beta must have at least one entry")
        if not np.isfinite(beta).all() or not math.isfinite(self.intercept):
            raise InvalidInputError("model parameters must be finite")
        if not self.hyper.fit_intercept and self.intercept != 0.0:
            raise InvalidInputError("intercept must be exactly 0 when fit_intercept is false")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def d(self) -> int:
        return self.beta.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = _as_matrix(X, self.d)
        return X @ self.beta + self.intercept


KERNEL_KINDS = ("linear", "rbf", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice.

    rbf: ``exp(-||x - z||^2 / (2 bandwidth^2))``;
    polynomial: ``(x.z + offset) ** degree``.
    """

    kind: str = "linear"
    bandwidth: float = 1.0
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise InvalidInputError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not (self.bandwidth > 0 and math.isfinite(self.bandwidth)):
            raise InvalidInputError(f"rbf bandwidth must be positive, got {self.bandwidth}")
        if self.kind == "polynomial":
            if int(self.degree) != self.degree or self.degree < 1:
                raise InvalidInputError(f"polynomial degree must be a positive integer, got {self.degree}")
            if not (self.offset >= 0):
                raise InvalidInputError(f"polynomial offset must be nonnegative, got {self.offset}")
        object.__setattr__(self, "degree", int(self.degree))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))
        object.__setattr__(self, "offset", float(self.offset))

    def matrix(self, A, B) -> np.ndarray:
        """K(A, B) with K_ij = k(A_i, B_j)."""
        A = np.asarray(A, dtype=np.float64)
        B = np.asarray(B, dtype=np.float64)
        inner = A @ B.T
        if self.kind == "linear":
            return inner
        if self.kind == "polynomial":
            return (inner + self.offset) ** self.degree
        sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * inner
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / (2.0 * self.bandwidth**2))

    def gradient(self, points, x) -> np.ndarray:
        """Rows are d/dx k(points_j, x)."""
        points = np.asarray(points, dtype=np.float64)
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "linear":
            return points.copy()
        if self.kind == "polynomial":
            inner = points @ x + self.offset
            return (self.degree * inner ** (self.degree - 1))[:, None] * points
        diff = x[None, :] - points
        k = np.exp(-(diff * diff).sum(1) / (2.0 * self.bandwidth**2))
        return -(k / self.bandwidth**2)[:, None] * diff


@dataclass(frozen=True)
class KernelModel:
    """h(x) = sum_j c_j y_j k(x_j, x) / (2 lam) + intercept.

    ``dual_coefs`` live in [mu/n, (1+mu)/n]; see :mod:`avgmargin.qp`.
    """

    dual_coefs: np.ndarray
    support_features: np.ndarray
    support_labels: np.ndarray
    kernel: KernelSpec = field(default_factory=KernelSpec)
    intercept: float = 0.0
    hyper: Hyperparams = field(default_factory=Hyperparams)

    def __post_init__(self):
        c = _frozen_array(self.dual_coefs, 1, "dual_coefs")
        X = _frozen_array(self.support_features, 2, "support_features")
        y = _frozen_array(self.support_labels, 1, "support_labels")
        n = c.shape[0]
        if n < 1 or X.shape[0] != n or y.shape[0] != n:
            raise InvalidInputError("dual_coefs, support_features and support_labels disagree in length")
        _check_labels(y, "support_labels")
        if not (np.isfinite(c).all() and np.isfinite(X).all() and math.isfinite(self.intercept)):
            raise InvalidInputError("model parameters must be finite")
        lower, upper = self.hyper.mu / n, (1.0 + self.hyper.mu) / n
        slack = 1e-12 * max(1.0, upper)
        if (c < lower - slack).any() or (c > upper + slack).any():
            raise InvalidInputError(f"dual coefficients outside the box [{lower}, {upper}]")
        if self.hyper.fit_intercept:
            if abs(float(c @ y)) > 1e-10:
                raise InvalidInputError(f"sum c_i y_i = {float(c @ y):.3e} violates the equality constraint")
        elif self.intercept != 0.0:
            raise InvalidInputError("intercept must be exactly 0 when fit_intercept is false")
        object.__setattr__(self, "dual_coefs", c)
        object.__setattr__(self, "support_features", X)
        object.__setattr__(self, "support_labels", y)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def d(self) -> int:
        return self.support_features.shape[1]

    @property
    def weights(self) -> np.ndarray:
        """Per-support-point weight c_j y_j / (2 lam)."""
        return self.dual_coefs * self.support_labels / (2.0 * self.hyper.lam)

    def decision_function(self, X) -> np.ndarray:
        X = _as_matrix(X, self.d)
        return self.kernel.matrix(X, self.support_features) @ self.weights + self.intercept

    def linear_weights(self) -> np.ndarray:
        """Primal weight vector; only defined for the linear kernel."""
        if self.kernel.kind != "linear":
            raise InvalidInputError("primal weights exist only for the linear kernel")
        return self.weights @ self.support_features


Model = Union[LinearModel, KernelModel]


def _as_matrix(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != d:
        raise InvalidInputError(f"expected inputs with {d} features, got shape {np.shape(X)}")
    return X


def decision_function(model: Model, X) -> np.ndarray:
    return model.decision_function(X)


def predict(model: Model, x):
    """sign(h(x)) with sign(0) = -1.

    A single vector returns an int; a matrix returns an array of +-1 floats.
    """
    arr = np.asarray(x, dtype=np.float64)
    scores = model.decision_function(arr)
    labels = np.where(scores > 0.0, 1.0, -1.0)
    if arr.ndim == 1:
        return int(labels[0])
    return labels


def accuracy(model: Model, data: Dataset) -> float:
    return float(np.mean(predict(model, data.features) == data.labels))


@dataclass(frozen=True)
class MarginStats:
    margins: np.ndarray
    average_margin: float
    mistake_fraction: Mapping[float, float]


def margin_stats(model: Model, data: Dataset, gammas: Sequence[float] = ()) -> MarginStats:
    """Per-point margins y_i h(x_i), their mean J(h) and K_gamma(h) for each gamma.

    K_gamma counts margins <= gamma (non-strict).
    """
    if model.d != data.d:
        raise InvalidInputError(f"model has {model.d} features, data has {data.d}")
    margins = data.labels * model.decision_function(data.features)
    margins.setflags(write=False)
    fractions = {}
    for g in gammas:
        g = float(g)
        if not g > 0:
            raise InvalidInputError(f"gamma levels must be positive, got {g}")
        fractions[g] = float(np.count_nonzero(margins <= g)) / data.n
    return MarginStats(margins, math.fsum(margins) / data.n, fractions)


# -- serialization -----------------------------------------------------------

def _encode(value) -> str:
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise InvalidInputError("cannot serialize non-finite value")
        text = format(float(value), ".17g")
        # keep a float marker so "-0" does not come back as the integer 0
        return text if any(ch in text for ch in ".e") else text + ".0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, np.ndarray):
        return _encode(value.tolist())
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    if isinstance(value, dict):
        items = (f"{json.dumps(k)}: {_encode(v)}" for k, v in value.items())
        return "{\n  " + ",\n  ".join(items) + "\n}"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _hyper_doc(h: Hyperparams) -> dict:
    return {"lam": h.lam, "mu": h.mu, "gamma": h.gamma, "fit_intercept": h.fit_intercept}


def model_to_document(model: Model) -> dict:
    doc = {"version": FORMAT_VERSION}
    if isinstance(model, LinearModel):
        doc.update(kind="linear", beta=model.beta, intercept=model.intercept,
                   dual_coefs=None, support_features=None, support_labels=None, kernel=None)
    elif isinstance(model, KernelModel):
        k = model.kernel
        doc.update(kind="kernel", beta=None, intercept=model.intercept,
                   dual_coefs=model.dual_coefs, support_features=model.support_features,
                   support_labels=model.support_labels,
                   kernel={"kind": k.kind, "bandwidth": k.bandwidth, "degree": k.degree, "offset": k.offset})
    else:
        raise TypeError(f"not a model: {type(model).__name__}")
    doc["hyper"] = _hyper_doc(model.hyper)
    return doc


def dumps_model(model: Model) -> str:
    """Versioned JSON text; reals carry 17 significant digits."""
    return _encode(model_to_document(model)) + "\n"


def _field(doc: dict, name: str):
    if name not in doc:
        raise ModelFormatError(f"model document is missing field {name!r}")
    return doc[name]


def model_from_document(doc) -> Model:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    version = _field(doc, "version")
    if str(version) != FORMAT_VERSION:
        raise UnknownVersionError(f"unknown model format version {version!r} (supported: {FORMAT_VERSION})")
    kind = _field(doc, "kind")
    try:
        h = _field(doc, "hyper")
        hyper = Hyperparams(lam=h["lam"], mu=h["mu"], gamma=h["gamma"], fit_intercept=h["fit_intercept"])
        if kind == "linear":
            return LinearModel(np.asarray(_field(doc, "beta"), dtype=np.float64),
                               _field(doc, "intercept"), hyper)
        if kind == "kernel":
            k = _field(doc, "kernel")
            spec = KernelSpec(kind=k["kind"], bandwidth=k["bandwidth"], degree=k["degree"], offset=k["offset"])
            return KernelModel(
                np.asarray(_field(doc, "dual_coefs"), dtype=np.float64),
                np.asarray(_field(doc, "support_features"), dtype=np.float64),
                np.asarray(_field(doc, "support_labels"), dtype=np.float64),
                spec, _field(doc, "intercept"), hyper,
            )
    except InvalidInputError as exc:
        raise InvariantViolationError(f"model document violates an invariant: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from exc
    raise ModelFormatError(f"unknown model kind {kind!r}")


def loads_model(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"model document is not valid JSON: {exc}") from exc
    return model_from_document(doc)


def save_model(model: Model, destination) -> None:
    text = dumps_model(model)
    if isinstance(destination, (str, os.PathLike)):
        with open(destination, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        destination.write(text)


def load_model(source) -> Model:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            return loads_model(fh.read())
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        return loads_model(source.read())
    raise TypeError("source must be a path or a readable file object")
