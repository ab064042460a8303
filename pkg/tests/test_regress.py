import numpy as np
import pytest
from scipy.special import expit

from medalcast.errors import DomainError, SeparationError
from medalcast.regress import (
    DesignMatrix,
    FitResult,
    elastic_net_poisson,
    logit_mle,
    ols,
)


def finite_diff_grad(f, x, eps=1e-6):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


# ---------------------------------------------------------------------------
# DesignMatrix / FitResult

def test_design_matrix_validation():
    with pytest.raises(DomainError):
        DesignMatrix(np.array([[1.0, np.inf]]), ("a", "b"))
    with pytest.raises(DomainError):
        DesignMatrix(np.ones((3, 2)), ("a",))


def test_fit_result_rejects_negative_se():
    with pytest.raises(DomainError):
        FitResult(np.zeros(1), np.array([-1.0]), 0.0, True, 1)


# ---------------------------------------------------------------------------
# OLS

def test_exact_linear_recovery(rng):
    X = np.column_stack([np.ones(50), rng.normal(size=(50, 2))])
    beta = np.array([1.5, -2.0, 0.25])
    y = X @ beta
    fit = ols(X, y)
    assert np.max(np.abs(fit.coefficients - beta)) <= 1e-10
    assert np.max(fit.standard_errors) <= 1e-6


def test_intercept_only_returns_mean(rng):
    y = rng.normal(5.0, 2.0, size=40)
    fit = ols(np.ones((40, 1)), y)
    assert fit.coefficients[0] == pytest.approx(y.mean())


def test_matches_normal_equations_oracle(rng):
    X = np.column_stack([np.ones(200), rng.normal(size=(200, 4))])
    y = rng.normal(size=200)
    fit = ols(X, y)
    oracle = np.linalg.inv(X.T @ X) @ X.T @ y
    assert np.max(np.abs(fit.coefficients - oracle)) <= 1e-8


def test_residuals_orthogonal_to_design(rng):
    X = np.column_stack([np.ones(120), rng.normal(size=(120, 3))])
    y = rng.normal(size=120)
    fit = ols(X, y)
    resid = y - X @ fit.coefficients
    scale = np.abs(X).max() * np.abs(resid).max()
    assert np.max(np.abs(X.T @ resid)) <= 1e-8 * max(scale, 1.0)


def test_rank_deficiency_names_columns(rng):
    x = rng.normal(size=30)
    X = DesignMatrix(
        np.column_stack([np.ones(30), x, 2 * x]), ("const", "x", "x_copy")
    )
    with pytest.raises(DomainError, match="x_copy"):
        ols(X, rng.normal(size=30))


def test_cluster_robust_matches_hand_sandwich(rng):
    n, p, G = 60, 2, 6
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = rng.normal(size=n)
    clusters = np.repeat(np.arange(G), n // G)
    fit = ols(X, y, cluster_ids=clusters)

    beta = np.linalg.inv(X.T @ X) @ X.T @ y
    u = y - X @ beta
    meat = np.zeros((p, p))
    for g in range(G):
        sel = clusters == g
        s = X[sel].T @ u[sel]
        meat += np.outer(s, s)
    bread = np.linalg.inv(X.T @ X)
    c = G / (G - 1) * (n - 1) / (n - p)
    cov = c * bread @ meat @ bread
    assert np.allclose(fit.covariance, cov)


# ---------------------------------------------------------------------------
# Logit MLE

def test_independent_balanced_response_near_zero(rng):
    n = 4000
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    y = (rng.random(n) < 0.5).astype(float)
    fit = logit_mle(X, y)
    assert np.max(np.abs(fit.coefficients)) < 0.1


def test_recovers_known_coefficients_within_3se(rng):
    n = 5000
    true = np.array([-0.5, 1.2, -0.8])
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    y = (rng.random(n) < expit(X @ true)).astype(float)
    fit = logit_mle(X, y)
    assert np.all(np.abs(fit.coefficients - true) <= 3 * fit.standard_errors)


def test_separation_raises():
    x = np.linspace(-2, 2, 40)
    y = (x > 0).astype(float)
    X = np.column_stack([np.ones(40), x])
    with pytest.raises(SeparationError):
        logit_mle(X, y)


def test_single_class_rejected():
    X = np.ones((10, 1))
    with pytest.raises(DomainError):
        logit_mle(X, np.ones(10))


def test_logit_gradient_matches_finite_differences(rng):
    n = 80
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    y = (rng.random(n) < 0.4).astype(float)
    b = rng.normal(scale=0.3, size=3)

    def nll(beta):
        eta = X @ beta
        return np.sum(np.logaddexp(0.0, eta) - y * eta)

    analytic = X.T @ (expit(X @ b) - y)
    fd = finite_diff_grad(nll, b)
    assert np.max(np.abs(analytic - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


def test_logit_accepts_fractional_weighted_responses(rng):
    n = 300
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    z = rng.random(n)
    w = rng.uniform(0.2, 1.0, size=n)
    fit = logit_mle(X, z, sample_weight=w)
    assert fit.converged


# ---------------------------------------------------------------------------
# Elastic-net Poisson

def test_unpenalized_intercept_only_closed_form(rng):
    y = rng.poisson(4.2, size=400)
    fit = elastic_net_poisson(np.ones((400, 1)), y, rho1=0.0, rho2=0.0)
    assert fit.coefficients[0] == pytest.approx(np.log(y.mean()), abs=1e-6)


def test_huge_l1_zeroes_slopes(rng):
    n = 200
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 3))])
    y = rng.poisson(3.0, size=n)
    fit = elastic_net_poisson(X, y, rho1=1e6, rho2=0.0)
    assert np.all(fit.coefficients[1:] == 0.0)
    assert fit.coefficients[0] == pytest.approx(np.log(y.mean()), abs=1e-4)


def test_two_parameter_grid_search_oracle(rng):
    # rho1=0.1, rho2=0.05 default config; the solver objective must match a
    # fine grid minimum over (intercept, slope) to 1e-4.
    n = 150
    x = rng.normal(size=n)
    y = rng.poisson(np.exp(0.3 + 0.5 * x))
    X = np.column_stack([np.ones(n), x])
    rho1, rho2 = 0.1, 0.05

    def objective(b0, b1):
        mu = np.exp(b0 + b1 * x)
        nll = np.sum(mu) - np.sum(y * (b0 + b1 * x))
        return nll + rho1 * abs(b1) + rho2 * b1 ** 2

    fit = elastic_net_poisson(X, y, rho1=rho1, rho2=rho2)
    b0g = np.linspace(fit.coefficients[0] - 0.2, fit.coefficients[0] + 0.2, 201)
    b1g = np.linspace(fit.coefficients[1] - 0.2, fit.coefficients[1] + 0.2, 201)
    grid_best = min(objective(b0, b1) for b0 in b0g for b1 in b1g)
    assert fit.objective <= grid_best + 1e-4


def test_objective_monotone_nonincreasing(rng):
    n = 100
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    y = rng.poisson(2.0, size=n)
    fit = elastic_net_poisson(X, y, rho1=0.2, rho2=0.1)
    diffs = np.diff(fit.trace)
    assert np.all(diffs <= 1e-9 * np.maximum(1.0, np.abs(fit.trace[:-1])))


def test_poisson_gradient_matches_finite_differences(rng):
    n = 60
    X = np.column_stack([np.ones(n), rng.normal(size=(n, 2))])
    y = rng.poisson(2.0, size=n).astype(float)
    rho2 = 0.05
    b = rng.normal(scale=0.2, size=3)
    pen = np.array([0.0, 1.0, 1.0])

    def smooth(beta):
        mu = np.exp(X @ beta)
        return np.sum(mu) - np.sum(y * (X @ beta)) + rho2 * np.sum(pen * beta**2)

    analytic = X.T @ (np.exp(X @ b) - y) + 2 * rho2 * pen * b
    fd = finite_diff_grad(smooth, b)
    assert np.max(np.abs(analytic - fd)) <= 1e-6 * max(1.0, np.max(np.abs(fd)))


def test_poisson_validates_counts():
    with pytest.raises(DomainError):
        elastic_net_poisson(np.ones((5, 1)), np.array([1.0, 2.5, 0, 0, 1]), 0.1, 0.1)
    with pytest.raises(DomainError):
        elastic_net_poisson(np.ones((5, 1)), np.array([1, -2, 0, 0, 1]), 0.1, 0.1)
    with pytest.raises(DomainError):
        elastic_net_poisson(np.ones((5, 1)), np.arange(5), -0.1, 0.0)


def test_poisson_offset_scales_exposure(rng):
    # Doubling exposure via the offset halves the fitted rate.
    y = rng.poisson(6.0, size=500)
    off = np.full(500, np.log(2.0))
    fit = elastic_net_poisson(np.ones((500, 1)), y, 0.0, 0.0, offset=off)
    assert fit.coefficients[0] == pytest.approx(np.log(y.mean() / 2.0), abs=1e-6)
