import numpy as np
import pytest
import statsmodels.api as sm

from gaplm_fic.errors import DataError, NonConvergenceError, RankDeficiencyError
from gaplm_fic.families import get_family, rho_eval
from gaplm_fic.quasi_glm import irls_fit, working_design
from gaplm_fic.spline_basis import SplineSpec, expand_design

from oracles import logistic_newton


def _logit_data(rng, n=200, J=2):
    x = rng.uniform(size=n)
    Z = rng.normal(size=(n, 2))
    m = np.sin(2 * np.pi * x) + Z @ [0.8, -0.5]
    y = (rng.uniform(size=n) < 1 / (1 + np.exp(-m))).astype(float)
    return y, expand_design(x, SplineSpec(3, J)), Z


def test_family_rho_weights():
    fam = get_family("bernoulli-logit")
    m = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_allclose(fam.rho1(m), 1.0)
    np.testing.assert_allclose(fam.rho2(m), np.exp(m) / (1 + np.exp(m)) ** 2)
    np.testing.assert_allclose(rho_eval("poisson-log", m, 2), np.exp(m))
    np.testing.assert_allclose(rho_eval("gaussian-identity", m, 1), 1.0)
    assert fam.rho2(np.array([800.0]))[0] > 0


def test_gaussian_identity_is_least_squares(rng):
    x = rng.uniform(size=80)
    Z = rng.normal(size=(80, 3))
    y = np.cos(3 * x) + Z @ [1.0, 0.0, -2.0] + rng.normal(scale=0.3, size=80)
    E = expand_design(x, SplineSpec(3, 3))
    fit = irls_fit(y, E, Z, "gaussian-identity")
    X, _ = working_design(E, Z)
    coef = np.linalg.lstsq(X, y, rcond=None)[0]
    np.testing.assert_allclose(fit.beta_hat, coef[-3:], atol=1e-10)
    np.testing.assert_allclose(fit.linear_predictor, X @ coef, atol=1e-10)


def test_logit_matches_newton_and_statsmodels(rng):
    y, E, Z = _logit_data(rng)
    fit = irls_fit(y, E, Z)
    X, _ = working_design(E, Z)
    b, ll = logistic_newton(X, y)
    np.testing.assert_allclose(fit.beta_hat, b[-2:], atol=1e-8)
    assert fit.qloglik == pytest.approx(ll, abs=1e-9)
    ref = sm.GLM(y, X, family=sm.families.Binomial()).fit(tol=1e-12)
    np.testing.assert_allclose(np.sqrt(np.diag(fit.beta_cov)), ref.bse[-2:], rtol=1e-6)


def test_sandwich_covariance_differs_but_is_psd(rng):
    y, E, Z = _logit_data(rng)
    model = irls_fit(y, E, Z)
    robust = irls_fit(y, E, Z, covariance="sandwich")
    np.testing.assert_allclose(model.beta_hat, robust.beta_hat)
    assert np.all(np.linalg.eigvalsh(robust.beta_cov) > 0)
    assert not np.allclose(model.beta_cov, robust.beta_cov)


def test_poisson_log_converges(rng):
    x = rng.uniform(size=150)
    Z = rng.normal(size=(150, 1))
    y = rng.poisson(np.exp(0.5 + 0.3 * Z[:, 0] + x))
    fit = irls_fit(y, expand_design(x, SplineSpec(2, 1)), Z, "poisson-log")
    assert fit.converged
    assert fit.beta_hat[0] == pytest.approx(0.3, abs=0.2)


def test_components_are_centered_and_predictions_consistent(rng):
    y, E, Z = _logit_data(rng)
    fit = irls_fit(y, E, Z)
    assert abs(fit.component(0).mean()) < 1e-10
    pred = fit.predict_linear(np.c_[np.linspace(0, 1, 5)], np.zeros((5, 2)))
    assert pred.shape == (5,)
    m_train = fit.centered_intercept + fit.component(0) + Z @ fit.beta_hat
    np.testing.assert_allclose(m_train, fit.linear_predictor, atol=1e-10)


def test_constant_response_is_separation(rng):
    _, E, Z = _logit_data(rng, n=40)
    with pytest.raises(NonConvergenceError):
        irls_fit(np.ones(40), E, Z)


def test_quasi_separation_raises_or_warns(rng):
    n = 60
    z = rng.normal(size=(n, 1))
    x = rng.uniform(size=n)
    y = (z[:, 0] > 0).astype(float)
    E = expand_design(x, SplineSpec(3, 0))
    with pytest.raises(NonConvergenceError, match="separation"):
        irls_fit(y, E, z)
    fit = irls_fit(y, E, z, separation="warn")
    assert fit.saturated
    assert np.all((fit.linear_predictor > 0) == (y > 0))


def test_rank_deficiency_names_column(rng):
    y, E, Z = _logit_data(rng, n=50)
    Zdup = np.c_[Z, Z[:, 0] * 2]
    with pytest.raises(RankDeficiencyError) as err:
        irls_fit(y, E, Zdup, z_names=["a", "b", "a2"])
    assert err.value.column == "a2"


def test_bad_response():
    E = expand_design(np.linspace(0, 1, 10), SplineSpec(1, 0))
    with pytest.raises(DataError):
        irls_fit(np.r_[np.zeros(9), 2.0], E, np.arange(10.0))
