"""Experiment orchestration and the command-line interface."""

from .config import ExperimentConfig, load_config
from .cv import cross_validate, fold_indices
from .experiments import CSV_HEADER, CheckReport, run_mnist_exp, run_prop_check, run_synth_exp

__all__ = [
    "CSV_HEADER",
    "CheckReport",
    "ExperimentConfig",
    "cross_validate",
    "fold_indices",
    "load_config",
    "run_mnist_exp",
    "run_prop_check",
    "run_synth_exp",
]
