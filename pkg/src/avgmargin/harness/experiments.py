"""The four-atom check and the synthetic and MNIST robustness sweeps."""

from __future__ import annotations

import csv
import io
import math
import time
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..core import Dataset, Hyperparams
from ..datagen import MnistSource, Prop1Config, gen_prop1, load_mnist, make_distribution
from ..robustness import compare_curves, curve_from_atoms, prop1_error_curve, robust_accuracy_linear
from ..trainers import TrainConfig, fit, prop1_am_mu
from .config import ExperimentConfig
from .cv import cross_validate
from .plots import accuracy_svg

CSV_HEADER = ("experiment", "method", "trial", "budget", "accuracy", "lambda", "mu", "gamma", "seconds")

SQRT5 = math.sqrt(5.0)
BETA_L2 = (0.2, 0.4)
BETA_AM = (11.0 / 15.0, 2.0 / 15.0)
PROP1_BREAKPOINTS = tuple(v * SQRT5 for v in (7 / 25, 15 / 25, 1.0, 2.0, 110 / 25))
PROP1_TABLE = ("<", "=", ">", "=", "<", "=")


# -- four-atom check ----------------------------------------------------------

@dataclass
class CheckReport:
    lines: List[str]
    passed: bool

    def text(self) -> str:
        return "\n".join(self.lines + ["PASS" if self.passed else "FAIL"])


def _regions_ok(regions, breakpoints, tol):
    if tuple(r.relation for r in regions) != PROP1_TABLE:
        return False
    starts = [r.start for r in regions[1:]]
    return all(abs(s - b) <= tol for s, b in zip(starts, breakpoints))


def run_prop_check(config: ExperimentConfig, coef_tol: float = 1e-3) -> CheckReport:
    """Train on the conditioned four-atom sample and verify coefficients and curves.

    Coefficients are checked to ``coef_tol``. The interval table is checked
    exactly (to 1e-12) on the closed-form coefficients, and on the trained
    ones to a breakpoint tolerance of 10 * coef_tol.
    """
    lam = 1e-4
    lines, ok = [], True

    def check(name, good, detail):
        nonlocal ok
        ok = ok and bool(good)
        lines.append(f"{'ok  ' if good else 'FAIL'} {name}: {detail}")

    exact = compare_curves(curve_from_atoms(BETA_AM), curve_from_atoms(BETA_L2))
    check("interval table (closed form)", _regions_ok(exact, PROP1_BREAKPOINTS, 1e-12),
          " ".join(f"[{r.start:.12g},{r.end:.12g}){r.relation}" for r in exact))

    for k in config.ks:
        data = gen_prop1(Prop1Config(k=k))
        base = Hyperparams(lam=lam, fit_intercept=False)
        l2 = fit(data, TrainConfig("l2", base)).model
        am = fit(data, TrainConfig("am", base.replace(mu=prop1_am_mu(lam, k)))).model
        err_l2 = float(np.max(np.abs(l2.beta - BETA_L2)))
        err_am = float(np.max(np.abs(am.beta - BETA_AM)))
        check(f"k={k} l2 coefficients", err_l2 <= coef_tol, f"beta={l2.beta.tolist()} max error {err_l2:.3g}")
        check(f"k={k} am coefficients", err_am <= coef_tol, f"beta={am.beta.tolist()} max error {err_am:.3g}")
        c_l2, c_am = prop1_error_curve(l2), prop1_error_curve(am)
        regions = compare_curves(c_am, c_l2, tol=1e-9)
        check(f"k={k} interval table (trained)", _regions_ok(regions, PROP1_BREAKPOINTS, 10 * coef_tol),
              "breakpoints " + ", ".join(f"{r.start:.6g}" for r in regions[1:]))
        for g in config.prop_gammas:
            adv = fit(data, TrainConfig("adversarial", base.replace(gamma=g))).model
            cos = float(adv.beta @ l2.beta / (np.linalg.norm(adv.beta) * np.linalg.norm(l2.beta)))
            check(f"k={k} adversarial gamma={g:g} parallel to l2", cos >= 1 - 1e-6,
                  f"beta={adv.beta.tolist()} cosine {cos:.12f}")
            c_adv = prop1_error_curve(adv)
            same = (c_adv.levels == c_l2.levels and len(c_adv.breakpoints) == len(c_l2.breakpoints)
                    and all(abs(a - b) <= 1e-6 for a, b in zip(c_adv.breakpoints, c_l2.breakpoints)))
            check(f"k={k} adversarial gamma={g:g} curve equals l2 curve", same,
                  f"breakpoints {list(c_adv.breakpoints)}")
    return CheckReport(lines, ok)


# -- sweeps -------------------------------------------------------------------

def _fmt(value: float) -> str:
    return repr(float(value))


class ResultWriter:
    """Collects rows and writes the CSV, rewriting the file after every trial."""

    def __init__(self, path: Optional[Path]):
        self.path = path
        self.rows: List[tuple] = []

    def add(self, experiment, method, trial, budget, acc, hyper: Hyperparams, seconds: Optional[float]):
        if not (0.0 <= acc <= 1.0):
            raise ValueError(f"accuracy {acc} outside [0, 1]")
        self.rows.append((experiment, method, int(trial), _fmt(budget), _fmt(acc), _fmt(hyper.lam),
                          _fmt(hyper.mu), _fmt(hyper.gamma), "" if seconds is None else f"{seconds:.3f}"))

    def text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        w.writerows(self.rows)
        return buf.getvalue()

    def flush(self):
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self.path.with_suffix(".csv.part")
            tmp.write_text(self.text(), encoding="utf-8")
            tmp.replace(self.path)


def mean_table(rows) -> Dict[tuple, Dict[float, float]]:
    """{(experiment, method): {budget: mean accuracy}} from writer rows."""
    acc = defaultdict(lambda: defaultdict(list))
    for exp, method, _trial, budget, value, *_ in rows:
        acc[(exp, method)][float(budget)].append(float(value))
    return {key: {e: math.fsum(v) / len(v) for e, v in sorted(per.items())} for key, per in acc.items()}


def _evaluate(writer, experiment, trial, train: Dataset, test: Dataset, config: ExperimentConfig, cv_seed):
    budgets = config.budget_list
    for method in config.methods:
        start = time.perf_counter()
        hyper = cross_validate(train, method, config.grid(method), config.folds, seed=cv_seed)
        model = fit(train, TrainConfig(method, hyper)).model
        accs = robust_accuracy_linear(model, test, budgets)
        seconds = time.perf_counter() - start if config.timings else None
        for e, a in zip(budgets, accs):
            writer.add(experiment, method, trial, e, a, hyper, seconds)


def _write_summary(writer: ResultWriter, out: Path, name: str, title: str):
    table = mean_table(writer.rows)
    lines = ["experiment,method,budget,mean_accuracy"]
    for (exp, method), per in table.items():
        for e, v in per.items():
            lines.append(f"{exp},{method},{_fmt(e)},{_fmt(v)}")
    (out / f"{name}_summary.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for exp in sorted({k[0] for k in table}):
        series = {m: per for (x, m), per in table.items() if x == exp}
        (out / f"{exp}.svg").write_text(accuracy_svg(series, f"{title} {exp}"), encoding="utf-8")
    return table


def run_synth_exp(config: ExperimentConfig) -> ResultWriter:
    """Robust accuracy on fresh subspace samples for every (m, n, trial)."""
    out = Path(config.out_dir)
    writer = ResultWriter(out / "synth.csv")
    for m in config.ms:
        for n in config.ns:
            exp = f"synth-m{m}-n{n}"
            for trial in range(config.n_trials):
                rng = np.random.default_rng(np.random.SeedSequence([int(config.seed), int(m), int(n), trial]))
                dist = make_distribution(config.d, m, config.eps, rng)
                train = dist.sample(n, rng)
                test = dist.sample(config.test_size, rng)
                _evaluate(writer, exp, trial, train, test, config, cv_seed=hash_seed(config.seed, m, n, trial))
                writer.flush()
    _write_summary(writer, out, "synth", "mean robust accuracy,")
    return writer


def hash_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def mnist_source(config: ExperimentConfig, trial: int) -> MnistSource:
    return MnistSource(root=config.mnist_root, mirror_url=config.mirror_url, sha256=dict(config.sha256),
                       subsample_fraction=config.mnist_fraction, digits=tuple(config.digits),
                       seed=hash_seed(config.seed, trial))


def run_mnist_exp(config: ExperimentConfig) -> ResultWriter:
    """Table-shaped robust accuracy on the two-digit MNIST task."""
    out = Path(config.out_dir)
    writer = ResultWriter(out / "mnist.csv")
    a, b = config.digits
    exp = f"mnist-{a}v{b}"
    for trial in range(config.n_trials):
        train, test = load_mnist(mnist_source(config, trial))
        _evaluate(writer, exp, trial, train, test, config, cv_seed=hash_seed(config.seed, 7, trial))
        writer.flush()
    table = _write_summary(writer, out, "mnist", "mean robust accuracy,")
    lines = ["method," + ",".join(_fmt(e) for e in config.budget_list)]
    for (x, method), per in table.items():
        lines.append(method + "," + ",".join(f"{per[float(e)]:.3f}" for e in config.budget_list))
    (out / "mnist_table.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return writer


def summarize(table: Dict[tuple, Dict[float, float]], budgets: Sequence[float]) -> str:
    width = max(len(m) for _, m in table) if table else 6
    head = " " * (width + 2) + " ".join(f"{e:>8g}" for e in budgets)
    rows = [head]
    for (exp, method), per in table.items():
        rows.append(f"{method:<{width}}  " + " ".join(f"{per.get(float(e), float('nan')):8.4f}" for e in budgets))
    return "\n".join(rows)
