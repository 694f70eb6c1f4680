import math

import numpy as np
import pytest
from scipy import stats

from selectica.exceptions import EmptySelection, SingularDesign
from selectica.lasso_dt import (
    cv_lambda,
    dt_interval,
    kkt_violation,
    lambda_grid,
    lambda_max,
    lasso_fit,
    ols_on_selected,
    selected_target,
    thin,
)
from selectica.selection import SelectionOutcome, select_v3
from selectica.simlab import gen_design
from selectica.stat_core import RngStream

Z975 = 1.959963984540054


def soft(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def random_problem(seed, n=30, p=20, rho=0.5):
    s = RngStream(seed, 0, "lasso")
    X = gen_design(n, p, rho, s)
    beta = s.generator.normal(size=p) * (s.generator.random(p) < 0.3) * 5
    Y = X @ beta + s.generator.normal(size=n)
    return X, Y


def test_kkt_on_random_problems():
    rng = np.random.default_rng(0)
    for seed in range(60):
        n, p = rng.integers(10, 60), rng.integers(2, 80)
        X, Y = random_problem(seed, n, p, rng.uniform(0, 0.9))
        lam = lambda_max(X, Y) * rng.uniform(0.001, 1.0)
        fit = lasso_fit(X, Y, lam)
        assert fit.converged
        assert kkt_violation(X, Y, fit) <= 1e-6


def test_orthogonal_design_closed_form():
    rng = np.random.default_rng(1)
    for _ in range(20):
        Q, _ = np.linalg.qr(rng.normal(size=(25, 10)))
        Y = rng.normal(size=25) * 3
        lam = rng.uniform(0.1, 6)
        fit = lasso_fit(Q, Y, lam)
        assert np.max(np.abs(fit.beta - soft(Q.T @ Y, lam / 2))) < 1e-8


def test_large_penalty_gives_zero():
    X, Y = random_problem(2)
    fit = lasso_fit(X, Y, lambda_max(X, Y))
    assert np.all(fit.beta == 0)
    assert lambda_max(X, Y) == pytest.approx(2 * np.max(np.abs(X.T @ Y)))


def test_zero_penalty_is_ols():
    X, Y = random_problem(3, n=40, p=3)
    fit = lasso_fit(X, Y, 0.0)
    assert np.max(np.abs(fit.beta - np.linalg.lstsq(X, Y, rcond=None)[0])) < 1e-6


def test_convergence_flag_is_honest():
    flags = []
    for seed in range(20):
        X, Y = random_problem(seed, n=30, p=60, rho=0.9)
        lam = lambda_max(X, Y) * 0.01
        fit = lasso_fit(X, Y, lam, max_sweeps=2, exact_fallback=False)
        flags.append(fit.converged)
        assert fit.iterations <= 2
        if fit.converged:
            assert kkt_violation(X, Y, fit) <= 1e-6
    assert not all(flags)


def test_negative_penalty_rejected():
    X, Y = random_problem(4)
    with pytest.raises(ValueError):
        lasso_fit(X, Y, -1.0)


def test_support_ordering():
    X, Y = random_problem(5)
    fit = lasso_fit(X, Y, lambda_max(X, Y) * 0.1)
    mags = np.abs(fit.beta[fit.support])
    assert np.all(np.diff(mags) <= 0) and np.all(mags > 0)


# -- cross-validation ----------------------------------------------------------

def test_cv_pure_noise_prefers_large_penalties():
    X = gen_design(60, 40, 0.5, RngStream(0, 0, "cv-design"))
    top_third = 0
    for k in range(50):
        Y = RngStream(1, k, "noise").generator.standard_normal(60)
        lam = cv_lambda(X, Y, 3, 50, RngStream(2, k, "cv"))
        grid = lambda_grid(X, Y, 50)
        assert grid[0] - 1e-12 <= lam <= grid[-1] + 1e-12
        top_third += lam >= grid[50 - 50 // 3 - 1]
    assert top_third / 50 >= 0.6


def test_cv_deterministic():
    X, Y = random_problem(6, n=60, p=30)
    assert cv_lambda(X, Y, 3, 50, RngStream(4)) == cv_lambda(X, Y, 3, 50, RngStream(4))
    with pytest.raises(ValueError):
        cv_lambda(X, Y, 1)


# -- thinning and intervals ----------------------------------------------------

def test_thin_moments_and_identity():
    reps = 100_000
    Y = np.full(reps, 0.7)
    pair = thin(Y + RngStream(0, 0, "y").generator.standard_normal(reps), 1.0, 1.0,
                RngStream(0, 0, "thin"))
    assert abs(pair.y_train.var() / 2.0 - 1) < 0.02
    assert abs(np.corrcoef(pair.y_train, pair.y_test)[0, 1]) < 0.01
    c = 1.7
    p2 = thin(np.arange(5.0), c, 1.0, RngStream(1))
    assert np.allclose(p2.y_train - p2.y_test, (c + 1 / c) * p2.zeta, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        thin(Y, 0.0, 1.0, RngStream(0))


def test_dt_single_column_width():
    X = np.zeros((10, 3))
    X[:, 0] = 1 / math.sqrt(10)
    X[:, 1:] = np.linalg.qr(np.random.default_rng(0).normal(size=(10, 2)))[0]
    out = SelectionOutcome(selected=(0,), zeta=np.zeros(10))
    iv = dt_interval(np.ones(10), X, out, 1.0, 0.05, 1.0)
    assert abs(iv.width - 5.5437) < 1e-3
    assert abs((iv.hi - iv.midpoint) - (iv.midpoint - iv.lo)) < 1e-12


def test_dt_matches_direct_formula():
    X, Y = random_problem(7, n=50, p=10)
    out = select_v3(Y, X, 0.8, RngStream(3), sigma=1.0)
    iv = dt_interval(Y, X, out, 0.8, 0.05, 1.0)
    Xs = X[:, list(out.selected)]
    beta = np.linalg.solve(Xs.T @ Xs, Xs.T @ (Y - out.zeta / 0.8))
    se = math.sqrt((1 + 1 / 0.8**2) * np.linalg.inv(Xs.T @ Xs)[0, 0])
    assert iv.midpoint == pytest.approx(beta[0], rel=1e-10)
    assert iv.width == pytest.approx(2 * Z975 * se, rel=1e-10)


def test_singular_and_empty_designs():
    X = np.ones((5, 2)) / math.sqrt(5)
    with pytest.raises(SingularDesign):
        ols_on_selected(X, np.ones(5), [0, 1])
    with pytest.raises(EmptySelection):
        ols_on_selected(X, np.ones(5), [])


def test_inference_independent_of_selection():
    """Given the selected set, the DT estimate is N(target, Sigma_11).

    Standardised pivots are N(0, 1) within every selected set, so pooling
    them over sets keeps that law; a KS distance checks it.
    """
    cfg_X = gen_design(40, 40, 0.5, RngStream(0, 0, "ks-design"))
    phi = np.where(np.arange(40) < 20, RngStream(0, 0, "ks-phi").generator.exponential(50 / 7, 40), 0)
    mu = cfg_X @ phi
    pivots = []
    for k in range(2000):
        Y = mu + RngStream(1, k, "ks-y").generator.standard_normal(40)
        try:
            out = select_v3(Y, cfg_X, 1.0, RngStream(2, k, "ks-sel"))
        except EmptySelection:
            continue
        iv = dt_interval(Y, cfg_X, out, 1.0, 0.05, 1.0)
        se = iv.width / (2 * Z975)
        pivots.append((iv.midpoint - selected_target(cfg_X, mu, out.selected)) / se)
    assert len(pivots) > 1900
    assert stats.kstest(pivots, "norm").statistic < 0.05
