"""Average-margin regularized linear and kernel classifiers with adversarial-robustness tools."""

from .core import (Dataset, Hyperparams, KernelModel, KernelSpec, LinearModel, MarginStats, accuracy,
                   load_model, margin_stats, predict, save_model)
from .robustness import AttackBudget, robust_error_kernel, robust_error_linear
from .trainers import TrainConfig, fit, train_am, train_am_kernel, train_l2

__version__ = "0.1.0"

__all__ = [
    "AttackBudget",
    "Dataset",
    "Hyperparams",
    "KernelModel",
    "KernelSpec",
    "LinearModel",
    "MarginStats",
    "TrainConfig",
    "accuracy",
    "fit",
    "load_model",
    "margin_stats",
    "predict",
    "robust_error_kernel",
    "robust_error_linear",
    "save_model",
    "train_am",
    "train_am_kernel",
    "train_l2",
]
