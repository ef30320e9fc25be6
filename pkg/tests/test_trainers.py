import numpy as np
import pytest
from conftest import random_dataset
from oracles import hinge_objective_1d

from avgmargin import objectives
from avgmargin.core import Dataset, Hyperparams, KernelSpec, margin_stats, predict
from avgmargin.datagen import Prop1Config, gen_prop1
from avgmargin.errors import DivergenceError, InvalidInputError, MissingCentroidError
from avgmargin.optim import OptimizerConfig
from avgmargin.trainers import (TrainConfig, fit, prop1_am_mu, train_adversarial, train_am, train_am_kernel,
                                train_l1, train_l2, train_logistic_am, train_song)


def cfg(method="l2", **hyper):
    return TrainConfig(method, Hyperparams(**hyper))


def prop1(k=1):
    return gen_prop1(Prop1Config(k=k))


def grid_min_1d(**kw):
    grid = np.linspace(-5, 5, 200_001)
    vals = hinge_objective_1d(grid, x=np.array([1.0, -1.0]), y=np.array([1.0, -1.0]), **kw)
    return grid[int(np.argmin(vals))]


# -- l2 --------------------------------------------------------------------------

def test_l2_one_dimensional(two_points):
    m = train_l2(two_points, cfg(lam=0.25))
    assert m.beta[0] == pytest.approx(1.0, abs=1e-6) and m.intercept == pytest.approx(0.0, abs=1e-6)
    assert grid_min_1d(lam=0.25) == pytest.approx(1.0, abs=1e-4)


def test_l2_prop1_coefficients():
    m = train_l2(prop1(), cfg(lam=1e-4, fit_intercept=False))
    np.testing.assert_allclose(m.beta, [0.2, 0.4], atol=1e-3)
    assert margin_stats(m, prop1()).margins.min() >= 1 - 1e-6


def test_l2_single_class_is_bounded():
    rng = np.random.default_rng(0)
    data = Dataset(rng.standard_normal((10, 2)), np.ones(10))
    r = fit(data, cfg(lam=1.0))
    assert np.isfinite(r.model.beta).all() and r.diagnostics.final_objective <= 1.0


# -- am --------------------------------------------------------------------------

def test_am_mu0_equals_l2():
    rng = np.random.default_rng(1)
    data = random_dataset(rng, 30, 3)
    a = fit(data, cfg("am", lam=0.05, mu=0.0)).diagnostics.final_objective
    b = fit(data, cfg("l2", lam=0.05)).diagnostics.final_objective
    assert a == pytest.approx(b, abs=1e-6)


@pytest.mark.parametrize("k", [1, 5])
def test_am_prop1_coefficients(k):
    lam = 1e-4
    m = train_am(prop1(k), cfg("am", lam=lam, mu=prop1_am_mu(lam, k), fit_intercept=False))
    np.testing.assert_allclose(m.beta, [11 / 15, 2 / 15], atol=1e-3)


def test_am_literal_threshold_reading():
    # mu = lam/15 plugged straight into the averaged objective lands elsewhere
    lam = 1e-4
    m = train_am(prop1(), cfg("am", lam=lam, mu=lam / 15, fit_intercept=False))
    np.testing.assert_allclose(m.beta, [1 / 3, 1 / 3], atol=1e-3)


def test_am_one_dimensional_closed_form(two_points):
    m = train_am(two_points, cfg("am", lam=0.25, mu=1.0, fit_intercept=False))
    assert m.beta[0] == pytest.approx(2.0, abs=1e-6)
    assert grid_min_1d(lam=0.25, mu=1.0) == pytest.approx(2.0, abs=1e-4)


def test_am_intercept_divergence_detected():
    X = np.array([[1.0], [2.0], [3.0], [-1.0]])
    data = Dataset(X, np.array([1.0, 1.0, 1.0, -1.0]))
    with pytest.raises(DivergenceError):
        fit(data, cfg("am", lam=0.1, mu=1.0))
    fit(data, cfg("am", lam=0.1, mu=1.0, fit_intercept=False))


# -- kernel ----------------------------------------------------------------------

def test_kernel_linear_matches_l2_predictions():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n, d = int(rng.integers(6, 51)), int(rng.integers(1, 11))
        data = random_dataset(rng, n, d)
        c = cfg("am", lam=0.05)
        lin = train_l2(data, c)
        ker = train_am_kernel(data, KernelSpec("linear"), c, tol=1e-10)
        Z = rng.standard_normal((200, d))
        keep = np.abs(lin.decision_function(Z)) > 1e-3
        assert (predict(lin, Z)[keep] == predict(ker, Z)[keep]).all()


def test_kernel_rbf_wide_bandwidth_converges():
    rng = np.random.default_rng(3)
    data = random_dataset(rng, 20, 2)
    m = train_am_kernel(data, KernelSpec("rbf", bandwidth=1e4), cfg("am", lam=0.1))
    assert abs(m.dual_coefs @ m.support_labels) <= 1e-10


def test_kernel_lower_bound_respected():
    rng = np.random.default_rng(4)
    data = random_dataset(rng, 16, 3)
    m = train_am_kernel(data, KernelSpec("rbf", bandwidth=1.0), cfg("am", lam=0.1, mu=0.5))
    assert (m.dual_coefs >= 0.5 / 16 - 1e-12).all()


# -- l1 --------------------------------------------------------------------------

def test_l1_huge_lambda_gives_zero():
    rng = np.random.default_rng(5)
    data = random_dataset(rng, 20, 3)
    r = fit(data, cfg("l1", lam=1e6))
    assert np.abs(r.model.beta).max() <= 1e-6
    assert r.diagnostics.final_objective == pytest.approx(1.0, abs=1e-6)


def test_l1_one_dimensional(two_points):
    assert train_l1(two_points, cfg("l1", lam=0.25)).beta[0] == pytest.approx(1.0, abs=1e-6)
    assert grid_min_1d(lam=0.25, l1=True) == pytest.approx(1.0, abs=1e-4)


def test_l1_suppresses_noise_feature():
    wins = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        y = np.where(np.arange(200) % 2 == 0, 1.0, -1.0)
        X = np.column_stack([y * 1.0 + rng.standard_normal(200), rng.standard_normal(200)])
        data = Dataset(X, y)
        # the two penalties scale differently, so compare the noise weight relative to the signal weight
        b1 = train_l1(data, cfg("l1", lam=0.01)).beta
        b2 = train_l2(data, cfg("l2", lam=0.01)).beta
        wins += abs(b1[1] / b1[0]) <= abs(b2[1] / b2[0])
    assert wins >= 40


# -- adversarial -----------------------------------------------------------------

def test_adversarial_gamma0_equals_l2():
    rng = np.random.default_rng(6)
    data = random_dataset(rng, 25, 4)
    a = fit(data, cfg("adversarial", lam=0.05, gamma=0.0)).diagnostics.final_objective
    b = fit(data, cfg("l2", lam=0.05)).diagnostics.final_objective
    assert a == pytest.approx(b, abs=1e-6)


def test_adversarial_one_dimensional(two_points):
    m = train_adversarial(two_points, cfg("adversarial", lam=0.1, gamma=0.5))
    assert m.beta[0] == pytest.approx(2.0, abs=1e-6)
    assert grid_min_1d(lam=0.1, gamma=0.5) == pytest.approx(2.0, abs=1e-4)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 1.5])
def test_adversarial_prop1_scaling(gamma):
    m = train_adversarial(prop1(), cfg("adversarial", lam=1e-4, gamma=gamma, fit_intercept=False))
    kappa = 1 / (1 - gamma / np.sqrt(5))
    np.testing.assert_allclose(m.beta, kappa * np.array([0.2, 0.4]), rtol=1e-4)
    cos = m.beta @ np.array([0.2, 0.4]) / (np.linalg.norm(m.beta) * np.sqrt(0.2))
    assert cos >= 1 - 1e-6


# -- song ------------------------------------------------------------------------

def test_song_gamma0_equals_l2():
    rng = np.random.default_rng(7)
    data = random_dataset(rng, 25, 3)
    a = fit(data, cfg("song", lam=0.05, gamma=0.0)).diagnostics.final_objective
    b = fit(data, cfg("l2", lam=0.05)).diagnostics.final_objective
    assert a == pytest.approx(b, abs=1e-6)


def test_song_points_at_centroids(two_points):
    a = train_song(two_points, cfg("song", lam=0.25, gamma=3.0))
    b = train_l2(two_points, cfg("l2", lam=0.25))
    np.testing.assert_allclose(a.beta, b.beta, atol=1e-6)


def test_song_four_points():
    # class centroids are +2 and -2, so every point sits at squared distance 1 and
    # gamma = 1 zeroes every margin target: the optimum is beta = 0, b = 0
    data = Dataset(np.array([[1.0], [3.0], [-1.0], [-3.0]]), np.array([1.0, 1.0, -1.0, -1.0]))
    np.testing.assert_allclose(objectives.centroid_shifts(data), [1, 1, 1, 1])
    m = train_song(data, cfg("song", lam=0.25, gamma=1.0))
    assert abs(m.beta[0]) <= 1e-6 and abs(m.intercept) <= 1e-6
    m_half = train_song(data, cfg("song", lam=0.25, gamma=0.5))
    grid = np.linspace(0, 3, 300_001)
    vals = 0.25 * grid**2 + np.mean(np.maximum(0, 0.5 - np.outer(grid, [1, 3, 1, 3])), axis=1)
    assert m_half.beta[0] == pytest.approx(grid[np.argmin(vals)], abs=1e-4)


def test_song_single_class():
    data = Dataset(np.ones((3, 2)), np.ones(3))
    with pytest.raises(MissingCentroidError):
        train_song(data, cfg("song", lam=0.1, gamma=0.1))


# -- logistic --------------------------------------------------------------------

def test_logistic_first_order_optimality():
    rng = np.random.default_rng(8)
    data = random_dataset(rng, 40, 3)
    m = train_logistic_am(data, cfg("logistic_am", lam=1e-3, mu=0.0))
    yf = data.labels * m.decision_function(data.features)
    w = -data.labels / (1 + np.exp(yf)) / data.n
    g = np.append(data.features.T @ w + 2e-3 * m.beta, w.sum())
    assert np.linalg.norm(g) <= 1e-6


def test_logistic_identity_forms():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        n = int(rng.integers(1, 20))
        h = rng.standard_normal(n) * 5
        y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
        mu = float(rng.uniform(0, 2))
        a = objectives.logistic_am_score_loss(h, y, mu)
        b = objectives.logistic_am_likelihood_form(h, y, mu)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_logistic_am_raises_normalized_margin():
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        y = np.where(np.arange(60) % 2 == 0, 1.0, -1.0)
        X = rng.standard_normal((60, 2)) * [0.5, 2.0] + 3.0 * y[:, None] * np.array([1.0, 0.3])
        data = Dataset(X, y)
        out = []
        for mu in (0.0, 0.1):
            m = train_logistic_am(data, cfg("logistic_am", lam=1e-3, mu=mu, fit_intercept=False))
            out.append(np.mean(y * (X @ m.beta)) / np.linalg.norm(m.beta))
        wins += out[1] > out[0]
    assert wins >= 18


# -- shared invariants -----------------------------------------------------------

@pytest.mark.parametrize("method", ["l2", "l1", "am", "adversarial", "song", "logistic_am"])
def test_trainer_invariants(method):
    rng = np.random.default_rng(10)
    data = random_dataset(rng, 30, 4)
    hyper = Hyperparams(lam=0.02, mu=0.1, gamma=0.1)
    r = fit(data, TrainConfig(method, hyper))
    recomputed = objectives.objective(method, data, hyper, r.model.beta, r.model.intercept)
    assert r.diagnostics.final_objective == pytest.approx(recomputed, rel=1e-10, abs=1e-12)
    assert recomputed <= objectives.objective(method, data, hyper, np.zeros(4), 0.0) + 1e-10
    assert (r.diagnostics.hinge_values >= 0).all()
    tr = np.array(r.diagnostics.objective_trace)
    if method != "logistic_am":
        assert (np.diff(tr) <= 1e-9 * (1 + np.abs(tr[:-1]))).all()


def test_row_space_reduction_is_exact():
    rng = np.random.default_rng(12)
    data = random_dataset(rng, 10, 40)
    for method in ("l2", "am", "adversarial", "song"):
        r = fit(data, cfg(method, lam=0.05, mu=0.1, gamma=0.1))
        # any component outside the span of the rows only adds to the penalty
        bump = rng.standard_normal(40)
        bump -= data.features.T @ np.linalg.lstsq(data.features.T, bump, rcond=None)[0]
        hyper = Hyperparams(lam=0.05, mu=0.1, gamma=0.1)
        f0 = objectives.objective(method, data, hyper, r.model.beta, r.model.intercept)
        f1 = objectives.objective(method, data, hyper, r.model.beta + 1e-3 * bump, r.model.intercept)
        assert f0 < f1


def test_subgradient_optimizer_available():
    rng = np.random.default_rng(11)
    data = random_dataset(rng, 20, 2)
    sub = TrainConfig("l2", Hyperparams(lam=0.1), OptimizerConfig(kind="subgradient", step0=0.5, iters=20_000))
    r = fit(data, sub)
    exact = fit(data, cfg("l2", lam=0.1)).diagnostics.final_objective
    assert exact <= r.diagnostics.final_objective <= exact + 1e-2
    tr = np.array(r.diagnostics.objective_trace)
    assert (np.diff(tr) <= 0).all()


def test_config_validation():
    with pytest.raises(InvalidInputError):
        TrainConfig("svm")
    with pytest.raises(InvalidInputError):
        OptimizerConfig(step0=0.0)
