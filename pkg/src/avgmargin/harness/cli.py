"""Command-line entry point.

Exit codes: 0 success, 1 failed check, 2 configuration error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..bounds import BoundInputs, bound_rhs, rademacher_linear
from ..core import Dataset, Hyperparams, LinearModel, load_model, margin_stats, save_model
from ..datagen import fetch_mnist
from ..errors import (AvgMarginError, ChecksumError, ConfigError, DataFormatError, DivergenceError, InvalidInputError,
                      ModelFormatError)
from ..robustness import robust_accuracy_linear
from ..trainers import METHODS, TrainConfig, fit
from .config import FULL_TRIALS, ExperimentConfig, from_mapping, load_config
from .experiments import mean_table, mnist_source, run_mnist_exp, run_prop_check, run_synth_exp, summarize

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def read_csv_dataset(path) -> Dataset:
    """Label in the first column (+1/-1), features after it; '#' lines are skipped."""
    try:
        raw = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    if raw.shape[1] < 2:
        raise DataFormatError(f"{path}: need a label column and at least one feature column")
    return Dataset(raw[:, 1:], raw[:, 0])


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--config", help="TOML file mirroring the experiment configuration")
    p.add_argument("--trials", type=int)
    p.add_argument("--budgets", type=_floats, help="comma-separated perturbation budgets")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avgmargin", description="Average-margin regularized classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prop-check", help="verify the four-atom coefficients and error-curve table")
    _common(p)
    p.add_argument("--k", type=int, action="append", help="sample size parameter (repeatable)")

    for name, helptext in (("synth-exp", "robustness sweep on synthetic subspace data"),
                           ("mnist-exp", "robustness sweep on two MNIST digits")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--methods", help="comma-separated subset of " + ",".join(METHODS))
        p.add_argument("--folds", type=int)
        p.add_argument("--paper-scale", action="store_true", help="use the full trial counts")
        p.add_argument("--timings", action="store_true", help="fill the seconds column (breaks byte-identity)")
        if name == "synth-exp":
            p.add_argument("--m", type=int, action="append", help="subspace dimension (repeatable)")
            p.add_argument("--n", type=int, action="append", help="training size (repeatable)")
            p.add_argument("--test-size", type=int)
        else:
            p.add_argument("--mnist-root", help="directory holding the IDX files")

    p = sub.add_parser("train", help="train one linear model on a CSV dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--method", default="am", choices=METHODS)
    p.add_argument("--lam", type=float, default=1e-2)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--no-intercept", action="store_true")
    p.add_argument("--model-out", required=True)

    p = sub.add_parser("eval", help="robust accuracy of a saved linear model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--budgets", type=_floats, default=[0.0])

    p = sub.add_parser("bound", help="generalization-bound right-hand side for a saved linear model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="training data the model was fit on")
    p.add_argument("--zeta", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--gamma", type=float, help="margin level (default: median training margin)")
    p.add_argument("--c", type=float, help="score bound (default: max |h| on the data)")
    p.add_argument("--mc-draws", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("fetch-mnist", help="download and verify the MNIST IDX files")
    p.add_argument("--config", help="TOML file with mnist_root, mirror_url and [sha256]")
    p.add_argument("--mnist-root")
    p.add_argument("--mirror-url")
    return parser


def _experiment_config(args, experiment: str) -> ExperimentConfig:
    cfg = load_config(args.config, experiment) if args.config else ExperimentConfig(experiment=experiment)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out_dir"] = args.out
    if args.trials is not None:
        over["trials"] = args.trials
    if args.budgets is not None:
        over["budgets"] = tuple(args.budgets)
    if getattr(args, "paper_scale", False) and args.trials is None:
        over["trials"] = FULL_TRIALS[experiment]
    if getattr(args, "methods", None):
        over["methods"] = tuple(m.strip() for m in args.methods.split(","))
    if getattr(args, "folds", None) is not None:
        over["folds"] = args.folds
    if getattr(args, "timings", False):
        over["timings"] = True
    if getattr(args, "k", None):
        over["ks"] = tuple(args.k)
    if getattr(args, "m", None):
        over["ms"] = tuple(args.m)
    if getattr(args, "n", None):
        over["ns"] = tuple(args.n)
    if getattr(args, "test_size", None) is not None:
        over["test_size"] = args.test_size
    if getattr(args, "mnist_root", None):
        over["mnist_root"] = args.mnist_root
    return from_mapping(over, cfg)


def _run(args) -> int:
    cmd = args.command
    if cmd == "prop-check":
        report = run_prop_check(_experiment_config(args, "prop-check"))
        print(report.text())
        return EXIT_OK if report.passed else EXIT_CHECK
    if cmd in ("synth-exp", "mnist-exp"):
        cfg = _experiment_config(args, cmd)
        writer = run_synth_exp(cfg) if cmd == "synth-exp" else run_mnist_exp(cfg)
        print(summarize(mean_table(writer.rows), cfg.budget_list))
        print(f"results written to {cfg.out_dir}")
        return EXIT_OK
    if cmd == "train":
        hyper = Hyperparams(lam=args.lam, mu=args.mu, gamma=args.gamma, fit_intercept=not args.no_intercept)
        result = fit(read_csv_dataset(args.data), TrainConfig(args.method, hyper))
        save_model(result.model, args.model_out)
        print(f"objective {result.diagnostics.final_objective!r}")
        return EXIT_OK
    if cmd == "eval":
        model = load_model(args.model)
        if not isinstance(model, LinearModel):
            raise ConfigError("eval handles linear models only")
        data = read_csv_dataset(args.data)
        for e, a in zip(args.budgets, robust_accuracy_linear(model, data, args.budgets)):
            print(f"budget {e!r} accuracy {a!r}")
        return EXIT_OK
    if cmd == "bound":
        model = load_model(args.model)
        if not isinstance(model, LinearModel):
            raise ConfigError("bound handles linear models only")
        data = read_csv_dataset(args.data)
        scores = model.decision_function(data.features)
        c = args.c if args.c is not None else float(np.max(np.abs(scores)))
        stats = margin_stats(model, data)
        gamma = args.gamma if args.gamma is not None else min(max(float(np.median(stats.margins)), 1e-9 * c), c)
        aug = Dataset(np.hstack([data.features, np.ones((data.n, 1))]), data.labels)
        B = float(np.linalg.norm(np.append(model.beta, model.intercept)))
        est = rademacher_linear(aug, B, args.mc_draws, args.seed)
        rhs = bound_rhs(stats, BoundInputs(args.zeta, args.delta, gamma, c, est.value, data.n))
        print(json.dumps({"rhs": rhs, "c": c, "gamma": gamma, "rademacher": est.value,
                          "rademacher_std_error": est.std_error, "average_margin": stats.average_margin,
                          "note": "c defaults to the empirical max |h|; heuristic, not a certified bound"}))
        return EXIT_OK
    if cmd == "fetch-mnist":
        cfg = load_config(args.config, "mnist-exp") if args.config else ExperimentConfig(experiment="mnist-exp")
        over = {}
        if args.mnist_root:
            over["mnist_root"] = args.mnist_root
        if args.mirror_url:
            over["mirror_url"] = args.mirror_url
        cfg = from_mapping(over, cfg)
        for key, path in fetch_mnist(mnist_source(cfg, 0)).items():
            print(f"{key}: {path}")
        return EXIT_OK
    raise ConfigError(f"unknown command {cmd!r}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, InvalidInputError, DivergenceError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, DataFormatError, ModelFormatError, ChecksumError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AvgMarginError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
