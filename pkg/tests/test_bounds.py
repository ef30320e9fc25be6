import math

import numpy as np
import pytest

from avgmargin.bounds import BoundInputs, bound_check, bound_rhs, complexity_terms, rademacher_linear
from avgmargin.core import Dataset, Hyperparams, MarginStats
from avgmargin.datagen import make_distribution
from avgmargin.errors import InvalidInputError
from avgmargin.trainers import TrainConfig

from oracles import rademacher_exact


def stats(margins, gammas=()):
    m = np.asarray(margins, float)
    return MarginStats(m, float(m.mean()), {float(g): float(np.mean(m <= g)) for g in gammas})


def inputs(**kw):
    base = dict(zeta=0.5, delta=0.05, gamma=1.0, c=1.0, rademacher=0.05, n=100)
    base.update(kw)
    return BoundInputs(**base)


def test_worked_example():
    s = stats([0.5] + [2.0] * 9)  # K_1 = 0.1
    rhs = bound_rhs(s, inputs(zeta=0.0, c=2.0, gamma=1.0))
    expect = 0.1 + 0.2 + math.sqrt(math.log(math.log2(8.0)) / 100) + math.sqrt(math.log(20) / 200)
    assert rhs == pytest.approx(expect, abs=1e-12)
    s = MarginStats(np.array([0.5, 1.0]), 0.75, {1.0: 0.1})
    assert bound_rhs(s, inputs(zeta=0.0)) == pytest.approx(0.50564, abs=1e-5)
    assert bound_rhs(s, inputs(zeta=0.0)) == pytest.approx(0.1 + 0.2 + 0.08325 + 0.12239, abs=1e-5)


def test_perfect_margin_limit():
    s = stats([1.0, 1.0, 1.0])
    assert bound_rhs(s, inputs(zeta=1.0, rademacher=0.0, n=10**12)) < 1e-5


def test_linear_in_zeta():
    s = stats([0.2, 0.9, -0.3, 0.6], gammas=[0.5])
    kw = dict(gamma=0.5, c=1.0)
    r0, r1, rh = (bound_rhs(s, inputs(zeta=z, **kw)) for z in (0.0, 1.0, 0.5))
    assert rh == pytest.approx((r0 + r1) / 2, abs=1e-12)
    shared = complexity_terms(inputs(**kw))
    assert rh == pytest.approx(0.5 * (1 - s.average_margin) + 0.5 * 0.5 + shared, abs=1e-12)


def test_monotone_in_n_and_rademacher():
    s = stats([0.2, 0.9, -0.3, 0.6])
    by_n = [bound_rhs(s, inputs(n=n)) for n in (1, 10, 100, 10**4, 10**8)]
    assert all(a >= b for a, b in zip(by_n, by_n[1:]))
    by_r = [bound_rhs(s, inputs(rademacher=r)) for r in (0.0, 0.01, 0.1, 1.0)]
    assert all(a <= b for a, b in zip(by_r, by_r[1:]))


def test_zeta_endpoints_use_one_statistic():
    kw = dict(gamma=0.5)
    a = stats([0.1, 0.9, 0.2, 0.8])      # J = 0.5, K = 0.5
    same_j = stats([0.6, 0.6, 0.6, 0.2])  # J = 0.5, K = 0.25
    same_k = stats([0.0, 0.1, 0.9, 0.8])  # J = 0.45, K = 0.5
    at = lambda s, z: bound_rhs(s, inputs(zeta=z, **kw))
    assert at(a, 1.0) == pytest.approx(at(same_j, 1.0), abs=1e-12)
    assert at(a, 0.0) == pytest.approx(at(same_k, 0.0), abs=1e-12)
    assert abs(at(a, 0.0) - at(same_j, 0.0)) > 0.1
    assert abs(at(a, 1.0) - at(same_k, 1.0)) > 0.01


def test_rejections():
    with pytest.raises(InvalidInputError):
        inputs(gamma=2.0, c=1.0)
    with pytest.raises(InvalidInputError):
        inputs(gamma=0.0)
    with pytest.raises(InvalidInputError):
        inputs(zeta=1.5)
    with pytest.raises(InvalidInputError):
        inputs(delta=1.0)
    with pytest.raises(InvalidInputError):
        bound_rhs(stats([3.0, 3.0]), inputs(c=2.0))


def test_rademacher_single_point():
    est = rademacher_linear(Dataset(np.array([[1.0, 0.0]]), np.array([1.0])), 1.0, mc_draws=50)
    assert est.value == 1.0 and est.std_error == 0.0


def test_rademacher_two_identical_points():
    data = Dataset(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1.0, -1.0]))
    est = rademacher_linear(data, 1.0, mc_draws=10_000, seed=1)
    assert abs(est.value - 0.5) <= 3 * est.std_error
    assert rademacher_exact(data.features, 1.0) == pytest.approx(0.5)


def test_rademacher_homogeneous_and_matches_enumeration():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((8, 3))
    data = Dataset(X, np.where(np.arange(8) % 2 == 0, 1.0, -1.0))
    a = rademacher_linear(data, 1.0, mc_draws=20_000, seed=5)
    b = rademacher_linear(data, 2.0, mc_draws=20_000, seed=5)
    assert b.value == 2 * a.value and a.value >= 0
    assert abs(a.value - rademacher_exact(X, 1.0)) <= 4 * a.std_error


def test_rademacher_validation():
    data = Dataset(np.ones((2, 1)), np.array([1.0, -1.0]))
    with pytest.raises(InvalidInputError):
        rademacher_linear(data, 0.0)
    with pytest.raises(InvalidInputError):
        rademacher_linear(data, 1.0, mc_draws=0)


def test_bound_check_saturates_with_large_rademacher():
    dist = make_distribution(10, 3, 0.01, np.random.default_rng(0))
    cfg = TrainConfig("am", Hyperparams(lam=0.01, mu=0.1))
    report = bound_check(dist, cfg, zeta=0.5, delta=0.05, n=30, trials=3, eval_size=500, rademacher=1e3)
    assert report.holds_fraction == 1.0
    assert all(t.rhs >= 1.0 for t in report.trials)
    assert "heuristic" in report.note
    for t in report.trials:
        assert 0 < t.gamma <= t.c
        assert np.isfinite(t.rhs_zeta0) and np.isfinite(t.rhs_zeta1)


def test_bound_check_deterministic():
    dist = make_distribution(10, 3, 0.01, np.random.default_rng(0))
    cfg = TrainConfig("l2", Hyperparams(lam=0.01))
    a = bound_check(dist, cfg, 0.5, 0.05, 30, 2, seed=3, eval_size=200, mc_draws=50)
    b = bound_check(dist, cfg, 0.5, 0.05, 30, 2, seed=3, eval_size=200, mc_draws=50)
    assert [t.rhs for t in a.trials] == [t.rhs for t in b.trials]
    assert [t.test_error for t in a.trials] == [t.test_error for t in b.trials]
