import random
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import pinv_ols
from viralmeme import graph
from viralmeme.baselines import (
    BinnedRegressor, LinearModel, b1_random_guess, b2_majority_guess, b3_influence_model,
    b4_ln_model, b5_ml_model, daily_log_features, fit_ols, influence_features,
    priors_from_labels, r_squared, regression_factory,
)
from viralmeme.evaluation import class_from_log_popularity, f1_report, popularity_class
from viralmeme.forest import dumps_model, loads_model


# ---- B1 --------------------------------------------------------------------

def test_single_prior_always_that_class():
    assert set(b1_random_guess({1: 1.0}, 3).predict(np.zeros((50, 1))).tolist()) == {1}


def test_random_guess_law_of_large_numbers():
    pred = b1_random_guess({1: 0.5, 2: 0.5}, 7).predict(np.zeros((10_000, 1)))
    assert abs(np.mean(pred == 1) - 0.5) <= 0.02


def test_random_guess_seeded():
    m1, m2 = b1_random_guess({1: 0.3, 2: 0.7}, 5), b1_random_guess({1: 0.3, 2: 0.7}, 5)
    X = np.zeros((100, 1))
    assert m1.predict(X).tolist() == m2.predict(X).tolist()


@pytest.mark.parametrize("priors", [{1: -0.1, 2: 1.1}, {1: 0.5, 2: 0.4}])
def test_random_guess_rejects_bad_priors(priors):
    with pytest.raises(ValueError):
        b1_random_guess(priors)


def test_random_guess_f1_matches_closed_form():
    # predicted class c with prob pi_c, true share q_c: P = q_c, R = pi_c
    actual = np.repeat([1, 2, 3], [5000, 3000, 2000])
    priors = {1: 0.2, 2: 0.3, 3: 0.5}
    q = {1: 0.5, 2: 0.3, 3: 0.2}
    scores = np.array([
        [f1_report(b1_random_guess(priors, s).predict(actual[:, None]), actual).f1_of(c)
         for c in (1, 2, 3)]
        for s in range(40)
    ])
    for j, c in enumerate((1, 2, 3)):
        expected = 2 * q[c] * priors[c] / (q[c] + priors[c])
        sem = scores[:, j].std(ddof=1) / np.sqrt(len(scores))
        assert abs(scores[:, j].mean() - expected) <= 3 * sem + 1e-3


def test_priors_from_labels():
    assert priors_from_labels([2, 2, 3, 4]) == {2: 0.5, 3: 0.25, 4: 0.25}


# ---- B2 --------------------------------------------------------------------

def test_majority_guess():
    assert b2_majority_guess([2, 2, 3]).label == 2
    assert b2_majority_guess([2, 2, 3, 3]).label == 2
    with pytest.raises(ValueError):
        b2_majority_guess([])


@given(st.lists(st.integers(1, 5), min_size=1, max_size=200))
def test_majority_nonzero_f1_on_one_class(y):
    y = np.array(y)
    rep = f1_report(b2_majority_guess(y).predict(y[:, None]), y)
    assert int(np.count_nonzero(rep.f1)) == 1


# ---- OLS -------------------------------------------------------------------

def test_exact_linear_recovery():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = X @ [1.5, -2.0, 0.25] + 4.0
    m = fit_ols(X, y)
    assert np.abs(y - m.predict_raw(X)).max() < 1e-8


def test_constant_target():
    X = np.random.default_rng(1).normal(size=(20, 2))
    m = fit_ols(X, np.full(20, 3.5))
    np.testing.assert_allclose(m.coefficients, 0, atol=1e-12)
    assert m.intercept == pytest.approx(3.5)


def test_matches_pseudo_inverse_oracle():
    rng = np.random.default_rng(2)
    for _ in range(20):
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        m = fit_ols(X, y)
        coef, icpt = pinv_ols(X, y)
        np.testing.assert_allclose(m.coefficients, coef, atol=1e-6)
        assert m.intercept == pytest.approx(icpt, abs=1e-6)
        resid = y - m.predict_raw(X)
        np.testing.assert_allclose(X.T @ resid, 0, atol=1e-6)


def test_ridge_fallback_on_collinear_columns():
    rng = np.random.default_rng(3)
    a = rng.normal(size=30)
    X = np.column_stack([a, 2 * a])
    m = fit_ols(X, 3 * a + 1)
    assert m.ridge_used
    np.testing.assert_allclose(m.predict_raw(X), 3 * a + 1, atol=1e-6)


def test_ols_errors():
    with pytest.raises(ValueError):
        fit_ols(np.zeros((2, 2)), [1, 2])
    with pytest.raises(ValueError):
        fit_ols([[np.nan], [1.0], [2.0]], [1, 2, 3])
    with pytest.raises(ValueError):
        fit_ols(np.zeros((3, 1)), [1, 2])
    with pytest.raises(ValueError):
        LinearModel(np.ones(2), 0.0).predict_raw(np.ones((1, 3)))


# ---- B3 --------------------------------------------------------------------

def test_influence_statistics():
    pr = np.array([0.1, 0.2, 0.3])
    fol = np.array([9.0, 99.0, 999.0])
    f = influence_features([0, 1, 2], pr, fol)
    assert f[:3].tolist() == pytest.approx([0.3, 0.2, 0.2])
    assert f[3] == pytest.approx(np.std([0.1, 0.2, 0.3]) / 0.2)
    assert f[4:7].tolist() == pytest.approx([3.0, 2.0, 2.0])


def test_single_adopter_cv_imputed_zero():
    f = influence_features([0], np.array([0.5]), np.array([0.0]))
    assert f[3] == 0.0 and f[7] == 0.0


def test_identical_adopters_predict_mean():
    X = np.tile(influence_features([0, 1], np.array([0.3, 0.7]), np.array([3.0, 4.0])), (20, 1))
    pop = np.arange(1, 21)
    m = b3_influence_model(X, pop)
    assert m.predict_raw(X[:1])[0] == pytest.approx(np.log10(pop).mean())


def _influence_data(seed=0, rows=400):
    rng = random.Random(seed)
    n = 300
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < (0.2 if min(i, j) < 20 else 0.01)]
    net = graph.Network.from_edges([str(i) for i in range(n)], edges)
    pr = graph.pagerank(net)
    X, pr_mean = [], []
    for _ in range(rows):
        ids = rng.sample(range(n), rng.randint(1, 25))
        X.append(influence_features(ids, pr, net.degree()))
        pr_mean.append(pr[ids].mean())
    return np.array(X), np.array(pr_mean)


def test_popularity_proportional_to_mean_pagerank_fits():
    X, pr_mean = _influence_data()
    pop = 10 * pr_mean
    m = b3_influence_model(X, pop)
    assert r_squared(m, X, np.log10(pop)) > 0.99


# ---- B4 --------------------------------------------------------------------

def test_ln_identity():
    early = np.arange(1, 60)
    m = b4_ln_model(early, early)
    assert m.coefficients[0] == pytest.approx(1, abs=1e-8)
    assert m.intercept == pytest.approx(0, abs=1e-8)


def test_ln_hundredfold():
    early = np.arange(1, 60)
    m = b4_ln_model(early, 100 * early)
    assert abs(m.coefficients[0] - 1) <= 1e-6
    assert abs(m.intercept - 2) <= 1e-6


def test_ln_drops_zero_early_with_warning():
    with pytest.warns(UserWarning, match="zero early"):
        m = b4_ln_model([0, 1, 2, 4, 8], [5, 10, 20, 40, 80])
    assert m.coefficients[0] == pytest.approx(1)


def test_ln_uncorrelated_collapses():
    rng = np.random.default_rng(4)
    early = 10 ** rng.uniform(0, 2, 2000)
    final = 10 ** rng.uniform(2.6, 3.4, 2000)
    m = b4_ln_model(early, final)
    x = np.log10(early)
    resid = np.log10(final) - m.predict_raw(x[:, None])
    se = np.sqrt(resid.var(ddof=2) / ((x - x.mean()) ** 2).sum())
    assert abs(m.coefficients[0]) <= 3 * se
    classes = {class_from_log_popularity(v) for v in m.predict_raw(x[:, None])}
    assert classes == {4}


# ---- B5 --------------------------------------------------------------------

def test_ml_day_one_only_reduces_to_single_coordinate():
    rng = np.random.default_rng(5)
    daily = np.zeros((40, 7))
    daily[:, 0] = rng.integers(1, 500, 40)
    final = daily[:, 0] * rng.uniform(1, 3, 40)
    m5 = b5_ml_model(daily, final)
    m1 = fit_ols(np.log10(1 + daily[:, :1]), np.log10(final))
    np.testing.assert_allclose(m5.predict_raw(daily_log_features(daily)),
                               m1.predict_raw(np.log10(1 + daily[:, :1])), atol=1e-6)


def test_ml_zero_vector_predicts_intercept():
    rng = np.random.default_rng(6)
    daily = rng.integers(0, 50, (60, 7))
    m = b5_ml_model(daily, daily.sum(axis=1) + 1)
    assert m.predict_raw(np.zeros((1, 7)))[0] == pytest.approx(m.intercept)


def test_ml_exact_recovery_of_log_sum():
    rng = np.random.default_rng(7)
    daily = rng.integers(0, 100, (80, 7))
    target = 10 ** daily_log_features(daily).sum(axis=1)
    m = b5_ml_model(daily, target)
    np.testing.assert_allclose(m.coefficients, 1, atol=1e-8)
    assert m.intercept == pytest.approx(0, abs=1e-8)


def test_regression_predictions_invariant_under_row_order():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(50, 3))
    t = X @ [0.5, 0.2, -0.1] + 2
    fac = regression_factory(cap=4)
    perm = rng.permutation(50)
    a = fac(X, None, t, 0).predict(X)
    b = fac(X[perm], None, t[perm], 0).predict(X)
    assert a.tolist() == b.tolist()


def test_binned_regressor_emits_classes_and_round_trips():
    lin = fit_ols(np.arange(10.0)[:, None], np.arange(10.0) / 2)
    model = BinnedRegressor(lin, cap=4)
    pred = model.predict(np.arange(10.0)[:, None])
    assert pred.tolist() == [class_from_log_popularity(v / 2, 4) for v in range(10)]
    again = loads_model(dumps_model(model))
    assert again.predict(np.arange(10.0)[:, None]).tolist() == pred.tolist()


def test_regression_factory_needs_targets():
    with pytest.raises(ValueError):
        regression_factory()(np.zeros((5, 1)), None, None, 0)


def test_b3_class_accuracy_on_deterministic_popularity():
    X, pr_mean = _influence_data(seed=1)
    pop = np.ceil(1e5 * pr_mean).astype(int)
    fac = regression_factory(cap=4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pred = fac(X, None, np.log10(pop), 0).predict(X)
    truth = np.array([popularity_class(int(p), 4) for p in pop])
    assert np.mean(pred == truth) >= 0.95
