"""EMOS and gradient-boosted EMOS."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from gamdvqr.emos import crps_normal, fit_emos, fit_emos_gb, predict_emos
from gamdvqr.errors import DomainError
from gamdvqr.taulink import Covariates

from conftest import yearly_covariates


def seasonal_gaussian_data(n, seed, a=(1.0, 0.5, -0.3, 0.8), b=(0.2, 0.1, -0.1, 0.3)):
    rng = np.random.default_rng(seed)
    cov = Covariates(rng.integers(1, 366, n).astype(float))
    xbar = 5.0 + 2.0 * rng.standard_normal(n)
    s = np.exp(0.2 * rng.standard_normal(n))
    mu = a[0] + a[1] * cov.u_sin + a[2] * cov.u_cos + a[3] * xbar
    sigma = np.exp(b[0] + b[1] * cov.u_sin + b[2] * cov.u_cos + b[3] * s)
    y = mu + sigma * rng.standard_normal(n)
    return y, xbar, s, cov


class TestGaussianCrps:
    def test_standard_normal_at_zero(self):
        # oracle: 2*phi(0) - 1/sqrt(pi)
        oracle = 2.0 * norm.pdf(0.0) - 1.0 / np.sqrt(np.pi)
        assert crps_normal(0.0, 1.0, 0.0) == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(0.233695, abs=1e-6)

    @pytest.mark.parametrize("mu,sigma,y", [
        (0.0, 1.0, 0.0), (0.0, 1.0, 1.7), (-2.0, 0.5, -1.0), (3.0, 2.5, 10.0)])
    def test_matches_numerical_integration(self, mu, sigma, y):
        # oracle: integral of (F(z) - 1{z >= y})^2 dz
        lo, hi = mu - 60 * sigma, mu + 60 * sigma
        val, _ = quad(lambda z: (norm.cdf(z, mu, sigma) - (z >= y)) ** 2, lo, hi,
                      points=[y], limit=400)
        assert crps_normal(mu, sigma, y) == pytest.approx(val, abs=1e-6)

    def test_positive_unless_degenerate(self):
        assert crps_normal(0.0, 1e-12, 0.0) < 1e-11
        assert crps_normal(0.0, 1.0, 5.0) > 0.0


class TestFitEmos:
    @pytest.mark.parametrize("loss", ["crps", "logs"])
    def test_coefficient_recovery(self, loss):
        y, xbar, s, cov = seasonal_gaussian_data(2000, seed=5)
        m = fit_emos(y, xbar, s, cov, loss=loss)
        a_hat = [m.mu_coef[0], m.mu_coef[1], m.mu_coef[2], m.mu_coef[3]]
        b_hat = [m.sigma_coef[0], m.sigma_coef[1], m.sigma_coef[2], m.sigma_coef[4]]
        np.testing.assert_allclose(a_hat, (1.0, 0.5, -0.3, 0.8), atol=0.1)
        np.testing.assert_allclose(b_hat, (0.2, 0.1, -0.1, 0.3), atol=0.15)
        # structural zeros: sd never enters mu, mean never enters sigma
        assert m.mu_coef[4] == 0.0 and m.sigma_coef[3] == 0.0

    def test_simple_recovery_without_seasonality(self):
        rng = np.random.default_rng(6)
        n = 2000
        cov = yearly_covariates(n)
        xbar = rng.standard_normal(n) * 2.0
        s = np.exp(0.1 * rng.standard_normal(n))
        y = 1.0 + 0.8 * xbar + np.exp(0.2) * rng.standard_normal(n)
        m = fit_emos(y, xbar, s, cov, loss="crps")
        assert m.mu_coef[0] == pytest.approx(1.0, abs=0.1)
        assert m.mu_coef[3] == pytest.approx(0.8, abs=0.1)
        assert m.sigma_coef[0] == pytest.approx(0.2, abs=0.15)

    def test_deterministic_limit(self):
        rng = np.random.default_rng(7)
        n = 500
        cov = yearly_covariates(n)
        xbar = rng.standard_normal(n)
        y = xbar.copy()
        s = np.exp(0.1 * rng.standard_normal(n))
        m = fit_emos(y, xbar, s, cov, loss="crps")
        assert m.mu_coef[3] == pytest.approx(1.0, abs=0.01)
        mu, sigma = m.mu_sigma(np.column_stack([cov.u_sin, cov.u_cos, xbar, s]))
        assert np.mean(crps_normal(mu, sigma, y)) < 0.01

    def test_minimum_sample_size(self):
        with pytest.raises(DomainError):
            fit_emos(np.zeros(50), np.zeros(50), np.ones(50),
                     yearly_covariates(50))

    def test_quantile_structure(self):
        y, xbar, s, cov = seasonal_gaussian_data(800, seed=8)
        m = fit_emos(y, xbar, s, cov)
        x_mat = np.column_stack([cov.u_sin, cov.u_cos, xbar, s])[:4]
        mu, sigma = predict_emos(m, x_mat)
        assert m.quantile(x_mat, 0.5) == pytest.approx(mu, abs=1e-12)
        q_lo = m.quantile(x_mat, 0.25)
        q_hi = m.quantile(x_mat, 0.75)
        np.testing.assert_allclose(q_lo + q_hi, 2.0 * mu, atol=1e-10)
        np.testing.assert_allclose(m.quantile(x_mat, 0.9),
                                   mu + sigma * norm.ppf(0.9), atol=1e-12)

    def test_hand_computed_prediction(self):
        y, xbar, s, cov = seasonal_gaussian_data(300, seed=9)
        m = fit_emos(y, xbar, s, cov)
        row = np.array([[0.5, 0.2, 4.0, 1.3]])
        mu, sigma = m.mu_sigma(row)
        a, b = m.mu_coef, m.sigma_coef
        assert mu[0] == pytest.approx(
            a[0] + a[1] * 0.5 + a[2] * 0.2 + a[3] * 4.0, abs=1e-12)
        assert sigma[0] == pytest.approx(
            np.exp(b[0] + b[1] * 0.5 + b[2] * 0.2 + b[4] * 1.3), abs=1e-12)


class TestFitEmosGb:
    def test_informative_predictor_updated_first(self):
        hits = 0
        for seed in range(10):
            rng = np.random.default_rng(seed)
            n = 1500
            x = rng.standard_normal((n, 10))
            y = 2.0 + 1.5 * x[:, 0] + rng.standard_normal(n)
            m = fit_emos_gb(y, x, loss="logs", max_iter=50, step=0.1)
            first = next((lbl for _, lbl in m.update_path), None)
            hits += first == "x0"
        assert hits >= 9

    def test_zero_step_is_intercept_only(self):
        rng = np.random.default_rng(10)
        n = 400
        x = rng.standard_normal((n, 5))
        y = 1.0 + x[:, 1] + rng.standard_normal(n)
        m = fit_emos_gb(y, x, loss="logs", max_iter=100, step=0.0)
        assert np.all(m.mu_coef[1:] == 0.0) and np.all(m.sigma_coef[1:] == 0.0)
        assert m.mu_coef[0] == pytest.approx(np.mean(y), abs=1e-12)

    def test_training_loss_nonincreasing(self):
        rng = np.random.default_rng(11)
        n = 800
        x = rng.standard_normal((n, 6))
        y = 0.5 + 0.8 * x[:, 2] - 0.4 * x[:, 4] + rng.standard_normal(n)
        losses = [fit_emos_gb(y, x, loss="logs", max_iter=iters, step=0.05,
                              stop="bic").meta["train_mean_loss"]
                  for iters in range(1, 40)]
        assert np.all(np.diff(losses) <= 1e-10)

    def test_standardization_invariance_of_path(self):
        rng = np.random.default_rng(12)
        n = 1000
        x = rng.standard_normal((n, 6))
        y = 1.0 + 2.0 * x[:, 3] + np.exp(0.1) * rng.standard_normal(n)
        m1 = fit_emos_gb(y, x, loss="logs", max_iter=60, step=0.05)
        x_scaled = x.copy()
        x_scaled[:, 3] *= 1000.0
        m2 = fit_emos_gb(y, x_scaled, loss="logs", max_iter=60, step=0.05)
        assert m1.update_path == m2.update_path

    def test_sparse_coefficients(self):
        rng = np.random.default_rng(13)
        n = 1200
        x = rng.standard_normal((n, 15))
        y = 1.0 + 1.2 * x[:, 0] + rng.standard_normal(n)
        m = fit_emos_gb(y, x, loss="logs", max_iter=120, step=0.05)
        touched = {lbl for _, lbl in m.update_path}
        for j, name in enumerate(m.names):
            if name not in touched:
                assert m.mu_coef[j + 1] == 0.0
                assert m.sigma_coef[j + 1] == 0.0

    def test_crps_loss_path_runs(self):
        rng = np.random.default_rng(14)
        n = 600
        x = rng.standard_normal((n, 4))
        y = 1.0 + x[:, 0] + rng.standard_normal(n)
        m = fit_emos_gb(y, x, loss="crps", max_iter=80, step=0.1)
        mu, sigma = m.mu_sigma(x)
        assert np.mean(crps_normal(mu, sigma, y)) < np.mean(
            crps_normal(np.full(n, y.mean()), np.full(n, y.std()), y)) + 1e-9

    def test_grid_search_selects_by_validation_crps(self):
        from gamdvqr.emos import grid_search_emos_gb
        rng = np.random.default_rng(16)
        n = 900
        x = rng.standard_normal((n, 5))
        y = 1.0 + 1.2 * x[:, 1] + rng.standard_normal(n)
        x_val = rng.standard_normal((300, 5))
        y_val = 1.0 + 1.2 * x_val[:, 1] + rng.standard_normal(300)
        model = grid_search_emos_gb(y, x, y_val, x_val,
                                    losses=("logs",), max_iters=(20, 200),
                                    steps=(0.05, 0.2), stops=("aic",))
        assert "val_mean_crps" in model.meta
        # the tuned model must not lose to the weakest grid point
        weak = fit_emos_gb(y, x, loss="logs", max_iter=20, step=0.05, stop="aic")
        mu_w, sg_w = weak.mu_sigma(x_val)
        assert model.meta["val_mean_crps"] <= float(
            np.mean(crps_normal(mu_w, sg_w, y_val))) + 1e-12

    def test_full_emos_beats_greedy_on_same_predictors(self):
        y, xbar, s, cov = seasonal_gaussian_data(1500, seed=15)
        full = fit_emos(y, xbar, s, cov, loss="crps")
        x_mat = np.column_stack([cov.u_sin, cov.u_cos, xbar, s])
        greedy = fit_emos_gb(y, x_mat, names=["u_sin", "u_cos", "ens_mean", "ens_sd"],
                             loss="crps", max_iter=400, step=0.05)
        mu_f, sg_f = full.mu_sigma(x_mat)
        mu_g, sg_g = greedy.mu_sigma(x_mat)
        assert np.mean(crps_normal(mu_f, sg_f, y)) <= np.mean(
            crps_normal(mu_g, sg_g, y)) + 1e-9
