"""Experiment configuration and its TOML loader."""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Optional, Tuple

from ..errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENTS = ("prop-check", "synth-exp", "mnist-exp")
ALL_METHODS = ("l2", "l1", "am", "adversarial", "song", "logistic_am")

LAMBDAS = (1e-4, 1e-3, 1e-2, 1e-1, 1.0)
MUS = (0.0, 0.01, 0.05, 0.1, 0.5)
ADV_GAMMAS = (0.01, 0.1, 0.5, 1.0)
SONG_GAMMAS = (1e-4, 1e-3, 1e-2)

DESK_TRIALS = {"prop-check": 1, "synth-exp": 20, "mnist-exp": 10}
FULL_TRIALS = {"prop-check": 1, "synth-exp": 100, "mnist-exp": 50}
DEFAULT_BUDGETS = {
    "prop-check": (0.0,),
    "synth-exp": (0.0, 0.25, 0.5, 1.0, 2.0),
    "mnist-exp": (0.01, 0.2, 1.0),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "synth-exp"
    methods: Tuple[str, ...] = ALL_METHODS
    lambdas: Tuple[float, ...] = LAMBDAS
    mus: Tuple[float, ...] = MUS
    adv_gammas: Tuple[float, ...] = ADV_GAMMAS
    song_gammas: Tuple[float, ...] = SONG_GAMMAS
    budgets: Optional[Tuple[float, ...]] = None
    trials: Optional[int] = None
    folds: int = 5
    seed: int = 0
    out_dir: str = "results"
    timings: bool = False
    # synthetic experiment
    d: int = 200
    eps: float = 0.01
    ms: Tuple[int, ...] = (5, 20)
    ns: Tuple[int, ...] = (50, 100, 200, 400)
    test_size: int = 10_000
    # four-atom check
    ks: Tuple[int, ...] = (1, 5)
    prop_gammas: Tuple[float, ...] = (0.5, 1.0, 1.5)
    # MNIST
    mnist_root: str = "data/mnist"
    mnist_fraction: float = 0.1
    digits: Tuple[int, int] = (0, 1)
    mirror_url: Optional[str] = None
    sha256: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        bad = [m for m in self.methods if m not in ALL_METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown or empty methods {bad or list(self.methods)}")
        if self.folds < 2:
            raise ConfigError(f"folds must be at least 2, got {self.folds}")
        if self.trials is not None and self.trials < 1:
            raise ConfigError(f"trials must be at least 1, got {self.trials}")
        if self.budgets is not None and any(not (e >= 0) for e in self.budgets):
            raise ConfigError(f"budgets must be nonnegative, got {self.budgets}")
        for name in ("lambdas", "mus", "adv_gammas", "song_gammas"):
            if not getattr(self, name):
                raise ConfigError(f"grid {name} is empty")
        if any(l <= 0 for l in self.lambdas):
            raise ConfigError("lambda grid values must be positive")

    @property
    def n_trials(self) -> int:
        return self.trials if self.trials is not None else DESK_TRIALS[self.experiment]

    @property
    def budget_list(self) -> Tuple[float, ...]:
        return tuple(self.budgets) if self.budgets is not None else DEFAULT_BUDGETS[self.experiment]

    def grid(self, method: str):
        """Hyperparameter grid for ``method`` as (lam, mu, gamma) triples."""
        if method in ("l2", "l1"):
            return [(l, 0.0, 0.0) for l in self.lambdas]
        if method in ("am", "logistic_am"):
            return [(l, m, 0.0) for l in self.lambdas for m in self.mus]
        if method == "adversarial":
            return [(l, 0.0, g) for l in self.lambdas for g in self.adv_gammas]
        return [(l, 0.0, g) for l in self.lambdas for g in self.song_gammas]


_TUPLE_FIELDS = {f.name for f in fields(ExperimentConfig) if str(f.type).startswith(("Tuple", "Optional[Tuple"))}


def from_mapping(values: dict, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    clean = {}
    for key, value in values.items():
        if key in _TUPLE_FIELDS and value is not None:
            if not isinstance(value, (list, tuple)):
                raise ConfigError(f"{key} must be a list")
            value = tuple(value)
        clean[key] = value
    try:
        return replace(base or ExperimentConfig(), **clean)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, experiment: Optional[str] = None) -> ExperimentConfig:
    """Read a TOML file whose keys mirror ExperimentConfig fields.

    Keys may sit at the top level or under a table named after the experiment.
    """
    try:
        with open(Path(path), "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    values = {k: v for k, v in doc.items() if not isinstance(v, dict) or k == "sha256"}
    if experiment is not None:
        values["experiment"] = experiment
        section = doc.get(experiment)
        if isinstance(section, dict):
            values.update(section)
    return from_mapping(values)
