"""Pair-copula estimation: likelihood, family selection, coefficient recovery."""

import numpy as np
import pytest

from gamdvqr import families as fam
from gamdvqr.pairfit import (CopulaSpec, clamp_tau, fit_pair, independence_spec,
                             pair_loglik)
from gamdvqr.taulink import Covariates, TauModel, link_tau

from conftest import yearly_covariates

GAUSS = fam.CopulaFamily("gaussian")


def gaussian_pairs(tau, n, seed, cov=None):
    """Pairs from a Gaussian copula; tau may be scalar or per-row."""
    rng = np.random.default_rng(seed)
    eta = fam.tau_to_param(GAUSS, np.broadcast_to(np.asarray(tau, dtype=float), (n,)))
    w = rng.random((2, n))
    u = w[0]
    v = fam.hfunc_inv(GAUSS, eta, 1, w[1], u)
    return u, np.asarray(v)


class TestPairLoglik:
    def test_independence_always_zero(self):
        cov = yearly_covariates(100)
        u, v = gaussian_pairs(0.5, 100, 0)
        assert pair_loglik(fam.INDEPENDENCE, TauModel("constant", np.zeros(1)),
                           u, v, cov) == 0.0

    def test_gaussian_zero_tau_is_zero(self):
        cov = yearly_covariates(200)
        u, v = gaussian_pairs(0.5, 200, 1)
        model = TauModel("constant", np.zeros(1))
        assert pair_loglik(GAUSS, model, u, v, cov) == pytest.approx(0.0, abs=1e-9)

    def test_likelihood_ordering_at_true_tau(self):
        n = 2000
        cov = yearly_covariates(n)
        u, v = gaussian_pairs(0.5, n, 2)
        at_true = pair_loglik(GAUSS, TauModel("constant", np.array([
            2.0 * np.arctanh(0.5)])), u, v, cov)
        at_zero = pair_loglik(GAUSS, TauModel("constant", np.zeros(1)), u, v, cov)
        assert at_true > at_zero

    def test_length_mismatch(self):
        from gamdvqr.errors import DomainError
        with pytest.raises(DomainError):
            pair_loglik(GAUSS, TauModel("constant", np.zeros(1)),
                        np.ones(3) * 0.5, np.ones(3) * 0.5, yearly_covariates(4))


class TestClampTau:
    def test_one_sided_families_stay_off_zero(self):
        tau = np.array([-0.5, 0.0, 0.5])
        clayton = clamp_tau(fam.CopulaFamily("clayton"), tau)
        assert np.all(clayton >= 1e-4)
        clayton90 = clamp_tau(fam.CopulaFamily("clayton", 90), tau)
        assert np.all(clayton90 <= -1e-4)

    def test_frank_magnitude_capped(self):
        capped = clamp_tau(fam.CopulaFamily("frank"), np.array([0.99, -0.99]))
        assert np.all(np.abs(capped) < fam.FRANK_TAU_MAX)


class TestFitPair:
    def test_small_sample_returns_independence(self):
        u, v = gaussian_pairs(0.8, 20, 3)
        spec = fit_pair(u, v, yearly_covariates(20))
        assert spec.family.kind == "independence"
        assert spec.flag == "too_few_observations"

    def test_independence_selected_on_independent_data(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            u, v = rng.random(2000), rng.random(2000)
            spec = fit_pair(u, v, yearly_covariates(2000), kind="constant",
                            family_kinds=("gaussian", "clayton", "gumbel", "frank"))
            hits += spec.family.kind == "independence"
        assert hits >= 18  # >= 90% of seeded trials

    def test_constant_gaussian_recovery(self):
        u, v = gaussian_pairs(0.5, 2000, 4)
        spec = fit_pair(u, v, yearly_covariates(2000), kind="constant")
        assert spec.family.kind == "gaussian"
        tau_hat = spec.tau_values(Covariates(np.array([100.0])))[0]
        assert tau_hat == pytest.approx(0.5, abs=0.03)

    def test_t1_coefficient_recovery(self):
        n = 1460
        cov = yearly_covariates(n)
        alpha = np.array([0.4, 0.5, -0.3])
        design = np.column_stack([np.ones(n), cov.u_sin, cov.u_cos])
        u, v = gaussian_pairs(link_tau(design @ alpha), n, 5, cov)
        spec = fit_pair(u, v, cov, kind="linear_sincos", family_kinds=("gaussian",))
        assert spec.family.kind == "gaussian"
        assert np.max(np.abs(spec.tau_model.coef - alpha)) < 0.15

    def test_nesting_linear_beats_constant(self):
        n = 1200
        cov = yearly_covariates(n)
        design = np.column_stack([np.ones(n), cov.u_sin, cov.u_cos])
        u, v = gaussian_pairs(link_tau(design @ np.array([0.3, 0.6, 0.0])), n, 6, cov)
        const = fit_pair(u, v, cov, kind="constant", family_kinds=("gaussian",))
        lin = fit_pair(u, v, cov, kind="linear_sincos", family_kinds=("gaussian",))
        assert lin.loglik >= const.loglik - 1e-8

    def test_bic_of_selection_is_minimal(self):
        u, v = gaussian_pairs(0.4, 800, 7)
        cov = yearly_covariates(800)
        selected = fit_pair(u, v, cov, kind="constant")
        for kinds in (("gaussian",), ("clayton",), ("gumbel",), ("frank",)):
            single = fit_pair(u, v, cov, kind="constant", family_kinds=kinds)
            assert selected.bic <= single.bic + 1e-9

    def test_deterministic(self):
        u, v = gaussian_pairs(0.5, 500, 8)
        cov = yearly_covariates(500)
        s1 = fit_pair(u, v, cov, kind="constant", family_kinds=("gaussian", "frank"))
        s2 = fit_pair(u, v, cov, kind="constant", family_kinds=("gaussian", "frank"))
        assert s1.family == s2.family
        np.testing.assert_array_equal(s1.tau_model.coef, s2.tau_model.coef)

    def test_negative_dependence_picks_rotation(self):
        base = fam.CopulaFamily("clayton")
        s = fam.copula_sample(base, fam.tau_to_param(base, 0.6), 1500, seed=9)
        u, v = 1.0 - s[:, 0], s[:, 1]  # flip one margin: tau becomes -0.6
        spec = fit_pair(u, v, yearly_covariates(1500), kind="constant",
                        family_kinds=("clayton",))
        assert spec.family.kind == "clayton"
        assert spec.family.rotation in (90, 270)
        tau_hat = spec.tau_values(Covariates(np.array([50.0])))[0]
        assert tau_hat == pytest.approx(-0.6, abs=0.05)

    def test_studentt_df_profiled_and_counted(self):
        st5 = fam.CopulaFamily("studentt", df=5.0)
        s = fam.copula_sample(st5, fam.tau_to_param(st5, 0.5), 2000, seed=10)
        spec = fit_pair(s[:, 0], s[:, 1], yearly_covariates(2000), kind="constant",
                        family_kinds=("gaussian", "studentt"))
        assert spec.family.kind == "studentt"
        assert spec.family.df in (3.0, 5.0, 10.0, 20.0)
        assert spec.n_params == spec.tau_model.n_coef + 1

    def test_spline_design_fits_second_harmonic(self):
        n = 1460
        cov = yearly_covariates(n)
        ang = 2.0 * np.pi * cov.doy / 365.25
        tau = link_tau(0.3 + 0.8 * np.sin(ang) + 0.5 * np.cos(2 * ang))
        u, v = gaussian_pairs(tau, n, 11, cov)
        spec = fit_pair(u, v, cov, kind="cyclic_spline", family_kinds=("gaussian",))
        assert spec.tau_model.kind == "cyclic_spline"
        assert spec.tau_model.n_coef == 8
        pred = spec.tau_values(cov)
        assert np.sqrt(np.mean((pred - tau) ** 2)) < 0.1

    def test_bic_formula_invariant(self):
        u, v = gaussian_pairs(0.5, 400, 12)
        spec = fit_pair(u, v, yearly_covariates(400), kind="constant",
                        family_kinds=("gaussian",))
        assert spec.bic == pytest.approx(
            -2.0 * spec.loglik + spec.n_params * np.log(400), abs=1e-9)

    def test_independence_spec_shape(self):
        spec = independence_spec()
        assert isinstance(spec, CopulaSpec)
        assert spec.n_params == 0 and spec.bic == 0.0 and spec.loglik == 0.0


class TestCoefficientPvalues:
    def test_informative_terms_significant_noise_not(self):
        from gamdvqr.pairfit import coefficient_pvalues
        n = 1460
        cov = yearly_covariates(n)
        design = np.column_stack([np.ones(n), cov.u_sin, cov.u_cos])
        # cos coefficient truly zero: its LR p-value should not be small
        u, v = gaussian_pairs(link_tau(design @ np.array([0.5, 0.6, 0.0])), n, 14, cov)
        spec = fit_pair(u, v, cov, kind="linear_sincos", family_kinds=("gaussian",))
        pvals = coefficient_pvalues(spec, u, v, cov)
        assert pvals.shape == (3,)
        assert pvals[0] < 1e-4 and pvals[1] < 1e-4
        assert pvals[2] > 0.01

    def test_independence_has_no_coefficients(self):
        from gamdvqr.pairfit import coefficient_pvalues
        spec = independence_spec()
        assert coefficient_pvalues(spec, np.array([0.5]), np.array([0.5]),
                                   yearly_covariates(1)).size == 0
