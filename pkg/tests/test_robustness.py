import math

import numpy as np
import pytest
from conftest import random_dataset
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import brute_force_robust_error

from avgmargin.core import Dataset, Hyperparams, KernelModel, KernelSpec, LinearModel, accuracy
from avgmargin.errors import InvalidInputError, UndefinedDirectionError
from avgmargin.robustness import (AttackBudget, Region, RobustCurve, compare_curves, curve_from_atoms,
                                  prop1_error_curve, robust_accuracy_linear, robust_error_kernel,
                                  robust_error_linear)

S5 = math.sqrt(5)


def lin(beta, b=0.0):
    return LinearModel(np.array(beta, float), b, Hyperparams(fit_intercept=b != 0.0))


def test_budget_validation():
    with pytest.raises(InvalidInputError):
        AttackBudget(-1.0)
    with pytest.raises(InvalidInputError):
        AttackBudget(float("inf"))


def test_zero_budget_is_plain_error():
    rng = np.random.default_rng(0)
    data = random_dataset(rng, 50, 3)
    m = lin(rng.standard_normal(3), 0.3)
    assert robust_error_linear(m, data, 0.0) == pytest.approx(1 - accuracy(m, data))
    # a score of exactly zero is an error for y = +1
    edge = Dataset(np.array([[0.0, 1.0]]), np.array([1.0]))
    assert robust_error_linear(lin([1.0, 0.0]), edge, 0.0) == 1.0


def test_single_point_distance():
    data = Dataset(np.array([[1.0, 2.0]]), np.array([1.0]))
    m = lin([0.2, 0.4])
    assert robust_error_linear(m, data, 1.0) == 0.0
    assert robust_error_linear(m, data, S5 * (1 - 1e-12)) == 0.0
    assert robust_error_linear(m, data, S5) == 1.0


def test_saturation():
    rng = np.random.default_rng(1)
    data = random_dataset(rng, 30, 4)
    assert robust_error_linear(lin(rng.standard_normal(4), 1.0), data, 1e9) == 1.0


def test_zero_direction_rejected():
    with pytest.raises(UndefinedDirectionError):
        robust_error_linear(lin([0.0, 0.0]), Dataset(np.ones((1, 2)), np.ones(1)), 0.5)


def test_matches_brute_force_attack():
    rng = np.random.default_rng(2)
    for _ in range(10):
        n, d = int(rng.integers(5, 101)), int(rng.integers(1, 6))
        data = random_dataset(rng, n, d)
        beta, b = rng.standard_normal(d), float(rng.standard_normal())
        for e in (0.0, 0.1, 0.5, 1.5):
            exact = robust_error_linear(lin(beta, b), data, e)
            assert exact == brute_force_robust_error(beta, b, data.features, data.labels, e, draws=20_000)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_monotone_and_scale_invariant(seed, kappa):
    rng = np.random.default_rng(seed)
    n, d = int(rng.integers(1, 30)), int(rng.integers(1, 5))
    data = random_dataset(rng, max(n, 2), d)
    beta, b = rng.standard_normal(d), float(rng.standard_normal())
    budgets = np.sort(rng.uniform(0, 3, 6))
    errs = [robust_error_linear(lin(beta, b), data, e) for e in budgets]
    assert errs == sorted(errs)
    # compare on a grid of exactly representable scales to avoid rounding at ties
    k = 2.0 ** round(math.log2(kappa))
    scaled = [robust_error_linear(lin(k * beta, k * b), data, e) for e in budgets]
    assert scaled == errs


def test_robust_accuracy_handles_zero_weights():
    data = Dataset(np.ones((4, 1)), np.array([1.0, 1.0, -1.0, -1.0]))
    assert robust_accuracy_linear(lin([0.0]), data, [0.0, 1.0]) == [0.5, 0.5]


def test_zero_score_negative_label():
    # predict maps score 0 to -1, so the point is correct without a budget
    # and lost to any positive budget
    data = Dataset(np.array([[0.0, 3.0]]), np.array([-1.0]))
    m = lin([1.0, 0.0])
    assert robust_error_linear(m, data, 0.0) == 0.0
    assert robust_error_linear(m, data, 1e-9) == 1.0


def _as_kernel(beta, b, data):
    """A linear-kernel model whose weights reproduce (beta, b) on generic data."""
    lam = 1.0
    w, *_ = np.linalg.lstsq(data.features.T, beta, rcond=None)
    c = 2 * lam * w * data.labels
    return c


def test_kernel_attack_is_lower_bound_and_tight_with_seeded_direction():
    rng = np.random.default_rng(3)
    checked = 0
    for trial in range(20):
        n, d = 12, 3
        data = random_dataset(rng, n, d)
        sv = Dataset(rng.standard_normal((n, d)), np.where(np.arange(n) % 2 == 0, 1.0, -1.0))
        c = rng.uniform(0.2 / n, 1.0 / n, n)
        model = KernelModel(c, sv.features, sv.labels, KernelSpec("linear"), 0.0,
                            Hyperparams(lam=0.5, mu=0.2, fit_intercept=False))
        beta = model.linear_weights()
        linear = lin(beta)
        e = float(rng.uniform(0.1, 1.0))
        exact = robust_error_linear(linear, data, e)
        sampled = robust_error_kernel(model, data, e, samples=20, seed=trial)
        assert sampled <= exact
        seeded = robust_error_kernel(model, data, e, samples=5, seed=trial,
                                     extra_directions=np.vstack([-beta, beta]))
        assert seeded == exact
        checked += 1
    assert checked == 20


def test_kernel_zero_budget_and_saturation():
    rng = np.random.default_rng(4)
    data = random_dataset(rng, 20, 2)
    X = rng.standard_normal((8, 2))
    y = np.where(np.arange(8) % 2 == 0, 1.0, -1.0)
    model = KernelModel(np.full(8, 0.1), X, y, KernelSpec("rbf", bandwidth=1.0), 0.0,
                        Hyperparams(lam=0.5, fit_intercept=False))
    assert robust_error_kernel(model, data, 0.0) == pytest.approx(1 - accuracy(model, data))
    lin_model = KernelModel(np.full(8, 0.1), X, y, KernelSpec("linear"), 0.0,
                            Hyperparams(lam=0.5, fit_intercept=False))
    w = lin_model.linear_weights()
    far = float(np.max(np.abs(data.features @ w)) / np.linalg.norm(w)) + 1e-9
    assert robust_error_kernel(lin_model, data, far, samples=10) == 1.0


def test_kernel_attack_deterministic():
    rng = np.random.default_rng(5)
    data = random_dataset(rng, 15, 2)
    model = KernelModel(np.full(6, 0.1), rng.standard_normal((6, 2)), np.array([1.0, -1] * 3),
                        KernelSpec("rbf", bandwidth=0.5), 0.0, Hyperparams(lam=0.5, fit_intercept=False))
    a = robust_error_kernel(model, data, 0.4, samples=30, seed=9)
    b = robust_error_kernel(model, data, 0.4, samples=30, seed=9)
    assert a == b


def test_prop1_curves():
    l2 = prop1_error_curve(lin([0.2, 0.4]))
    assert l2.levels == (0.25, 0.5, 1.0)
    np.testing.assert_allclose(l2.breakpoints, [S5, 2 * S5], rtol=0, atol=1e-12)
    am = prop1_error_curve(lin([11 / 15, 2 / 15]))
    assert am.levels == (0.0, 0.25, 0.5, 1.0)
    np.testing.assert_allclose(am.breakpoints, np.array([7, 15, 110]) * S5 / 25, rtol=0, atol=1e-12)
    axis = prop1_error_curve(lin([1.0, 0.0]))
    assert axis.breakpoints == (1.0, 10.0) and axis.levels == (0.0, 0.5, 1.0)


def test_prop1_curve_rejects_wrong_shape():
    with pytest.raises(InvalidInputError):
        prop1_error_curve(lin([1.0, 0.0, 0.0]))
    with pytest.raises(InvalidInputError):
        prop1_error_curve(lin([1.0, 0.0], 0.5))


def test_curve_matches_point_evaluation():
    atoms_X = np.array([[10, 0], [-10, 0], [1, 2], [1, -2], [-1, -2], [-1, 2]], float)
    atoms_y = np.array([1, -1, 1, 1, -1, -1], float)
    w = np.array([2, 2, 1, 1, 1, 1]) / 8
    rng = np.random.default_rng(6)
    for _ in range(50):
        beta = rng.standard_normal(2)
        curve = curve_from_atoms(beta)
        for e in rng.uniform(0, 12, 20):
            m = atoms_y * (atoms_X @ beta) - e * np.linalg.norm(beta)
            assert curve(e) == pytest.approx(float(w @ (m <= 0)), abs=1e-12)


def test_compare_prop1_table():
    regions = compare_curves(prop1_error_curve(lin([11 / 15, 2 / 15])), prop1_error_curve(lin([0.2, 0.4])))
    expected = [(0, 7 * S5 / 25, "<"), (7 * S5 / 25, 15 * S5 / 25, "="), (15 * S5 / 25, S5, ">"),
                (S5, 2 * S5, "="), (2 * S5, 110 * S5 / 25, "<"), (110 * S5 / 25, math.inf, "=")]
    assert [r.relation for r in regions] == [x[2] for x in expected]
    for r, (s, e, _) in zip(regions, expected):
        assert abs(r.start - s) <= 1e-12 and (r.end == e or abs(r.end - e) <= 1e-12)


def test_compare_trivial_cases():
    a = RobustCurve((1.0,), (0.0, 1.0))
    assert compare_curves(a, a) == [Region(0.0, math.inf, "=")]
    b = RobustCurve((2.0,), (0.0, 1.0))
    assert compare_curves(a, b) == [Region(0.0, 1.0, "="), Region(1.0, 2.0, ">"), Region(2.0, math.inf, "=")]


def test_curve_validation():
    with pytest.raises(InvalidInputError):
        RobustCurve((1.0, 0.5), (0.0, 0.5, 1.0))
    with pytest.raises(InvalidInputError):
        RobustCurve((1.0,), (0.5, 0.2))
    with pytest.raises(InvalidInputError):
        RobustCurve((1.0,), (0.5,))
