"""Maximum-likelihood estimation of a single conditional pair-copula.

For each candidate family the tau-model coefficients are fitted by BFGS
with central-difference gradients, starting from the constant-correlation
solution; family selection is by BIC with coefficient-count penalty.
Clayton and Gumbel cover one dependence sign per rotation, so the rotation
is picked from the sign of the empirical tau and the predicted tau is
clamped to the admissible side of zero with a small margin.  Independence
is always a candidate with zero parameters.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.stats import kendalltau

from . import families as fam
from .errors import DomainError
from .taulink import (Covariates, DEFAULT_N_BASIS, TauModel, build_design,
                      cyclic_second_diff_penalty, inverse_link_tau, link_tau,
                      spline_knots)

DEFAULT_FAMILY_KINDS = ("gaussian", "studentt", "clayton", "gumbel", "frank")
STUDENTT_DF_GRID = (3.0, 5.0, 10.0, 20.0)
LAMBDA_GRID = (0.0, 0.1, 1.0, 10.0, 100.0)
MIN_PAIR_N = 30

_TAU_EDGE = 1e-4      # margin at the tau = 0 boundary of one-sided families
_TAU_CAP = 0.999      # magnitude cap keeping parameters numerically sane
_GRAD_STEP = 1e-6


def clamp_tau(family: fam.CopulaFamily, tau):
    """Clamp predicted tau into the family's numerically safe range."""
    tau = np.asarray(tau, dtype=float)
    kind, rot = family.kind, family.rotation
    if kind == "independence":
        return np.zeros_like(tau)
    if kind in ("gaussian", "studentt"):
        return np.clip(tau, -0.9999, 0.9999)
    if kind == "frank":
        m = fam.FRANK_TAU_MAX - 1e-6
        return np.clip(tau, -m, m)
    if rot in (0, 180):
        return np.clip(tau, _TAU_EDGE, _TAU_CAP)
    return np.clip(tau, -_TAU_CAP, -_TAU_EDGE)


@dataclass
class CopulaSpec:
    """A selected pair-copula: family plus fitted tau model and fit stats."""

    family: fam.CopulaFamily
    tau_model: TauModel
    loglik: float
    n_params: int
    bic: float
    flag: str = "ok"

    def tau_values(self, cov: Covariates) -> np.ndarray:
        return clamp_tau(self.family, self.tau_model.predict(cov))

    def eta_values(self, cov: Covariates) -> np.ndarray:
        return fam.tau_to_param(self.family, self.tau_values(cov))

    def logpdf(self, u, v, cov: Covariates) -> np.ndarray:
        return fam.copula_logpdf(self.family, self.eta_values(cov), u, v)

    def h_of_left(self, w_left, w_right, cov: Covariates) -> np.ndarray:
        """Conditional CDF of the first edge slot given the second."""
        return fam.hfunc(self.family, self.eta_values(cov), 2, w_left, w_right)

    def h_of_right(self, w_right, w_left, cov: Covariates) -> np.ndarray:
        """Conditional CDF of the second edge slot given the first."""
        return fam.hfunc(self.family, self.eta_values(cov), 1, w_right, w_left)

    def hinv_of_left(self, p, w_right, cov: Covariates) -> np.ndarray:
        return fam.hfunc_inv(self.family, self.eta_values(cov), 2, p, w_right)


def independence_spec(flag: str = "ok") -> CopulaSpec:
    model = TauModel("constant", np.zeros(1))
    return CopulaSpec(fam.INDEPENDENCE, model, loglik=0.0, n_params=0, bic=0.0, flag=flag)


def pair_loglik(family: fam.CopulaFamily, tau_model: TauModel, u, v, cov: Covariates) -> float:
    """Sum of log pair-copula densities with tau evaluated per row."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or len(cov) != u.shape[0]:
        raise DomainError("pairs and covariates must have equal length")
    if family.kind == "independence":
        return 0.0
    tau = clamp_tau(family, tau_model.predict(cov))
    eta = fam.tau_to_param(family, tau)
    return float(np.sum(fam.copula_logpdf(family, eta, u, v)))


def _fd_gradient(func, step=_GRAD_STEP):
    def grad(x):
        g = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = step
            g[i] = (func(x + e) - func(x - e)) / (2.0 * step)
        return g
    return grad


def _neg_loglik_factory(family, u, v, design, lam, pen_mat):
    def nll(beta):
        tau = clamp_tau(family, link_tau(design @ beta))
        try:
            eta = fam.tau_to_param(family, tau)
            ll = np.sum(fam.copula_logpdf(family, eta, u, v))
        except (DomainError, FloatingPointError):
            return 1e10
        if not np.isfinite(ll):
            return 1e10
        val = -ll
        if lam > 0.0:
            val += 0.5 * lam * beta @ pen_mat @ beta
        return val
    return nll


def _maximize(nll, beta0, maxiter=500):
    res = minimize(nll, beta0, jac=_fd_gradient(nll), method="BFGS",
                   options={"gtol": 1e-6, "maxiter": maxiter})
    beta = res.x if nll(res.x) <= nll(beta0) else beta0
    return beta, -nll(beta)


def _init_alpha0(family, tau_emp):
    lo, hi = fam.tau_bounds(family)
    margin = 0.01
    tau0 = np.clip(tau_emp, lo + margin if lo > -1 else -0.95, hi - margin if hi < 1 else 0.95)
    if family.kind in ("clayton", "gumbel"):
        if family.rotation in (0, 180):
            tau0 = max(tau0, margin)
        else:
            tau0 = min(tau0, -margin)
    return float(inverse_link_tau(tau0))


def _fit_family_design(family, u, v, cov, kind, n_basis, lambda_grid, tau_emp):
    """Fit one family under one design; returns (tau_model, loglik) or None."""
    design_c = build_design(cov, "constant")
    nll_c = _neg_loglik_factory(family, u, v, design_c, 0.0, None)
    beta_c, ll_c = _maximize(nll_c, np.array([_init_alpha0(family, tau_emp)]))
    if not np.isfinite(ll_c) or ll_c <= -1e9:
        return None
    if kind == "constant":
        return TauModel("constant", beta_c), ll_c

    if kind == "linear_sincos":
        design = build_design(cov, "linear_sincos")
        beta0 = np.array([beta_c[0], 0.0, 0.0])
        nll = _neg_loglik_factory(family, u, v, design, 0.0, None)
        beta, ll = _maximize(nll, beta0)
        if not np.isfinite(ll) or ll <= -1e9:
            return None
        return TauModel("linear_sincos", beta), ll

    # cyclic spline: pick the ridge penalty by an effective-dof BIC
    knots = spline_knots(n_basis)
    design = build_design(cov, "cyclic_spline", knots)
    pen = cyclic_second_diff_penalty(n_basis)
    n = len(u)
    beta0 = np.full(n_basis, beta_c[0])
    best = None
    for lam in lambda_grid:
        nll = _neg_loglik_factory(family, u, v, design, lam, pen)
        beta, _ = _maximize(nll, beta0)
        nll_plain = _neg_loglik_factory(family, u, v, design, 0.0, None)
        ll = -nll_plain(beta)
        if not np.isfinite(ll) or ll <= -1e9:
            continue
        edf = _effective_dof(nll_plain, beta, lam, pen) if lam > 0.0 else float(n_basis)
        crit = -2.0 * ll + edf * np.log(n)
        if best is None or crit < best[0]:
            best = (crit, TauModel("cyclic_spline", beta, knots=knots, penalty=float(lam)), ll)
    if best is None:
        return None
    return best[1], best[2]


def _effective_dof(nll_plain, beta, lam, pen):
    """tr((H + lam*P)^-1 H) from a finite-difference Hessian of -loglik."""
    k = beta.size
    h = 1e-4
    hess = np.empty((k, k))
    f0 = nll_plain(beta)
    fp = np.empty(k)
    fm = np.empty(k)
    for i in range(k):
        e = np.zeros(k)
        e[i] = h
        fp[i] = nll_plain(beta + e)
        fm[i] = nll_plain(beta - e)
        hess[i, i] = (fp[i] - 2.0 * f0 + fm[i]) / h**2
    for i in range(k):
        for j in range(i + 1, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = h
            ej[j] = h
            fpp = nll_plain(beta + ei + ej)
            fmm = nll_plain(beta - ei - ej)
            hess[i, j] = hess[j, i] = (fpp - fp[i] - fp[j] + 2.0 * f0 - fm[i] - fm[j] + fmm) / (
                2.0 * h**2)
    hess = 0.5 * (hess + hess.T)
    try:
        sol = np.linalg.solve(hess + lam * pen + 1e-10 * np.eye(k), hess)
        edf = float(np.trace(sol))
    except np.linalg.LinAlgError:
        return float(k)
    if not np.isfinite(edf) or edf < 1.0 or edf > k:
        return float(k)
    return edf


def coefficient_pvalues(spec: CopulaSpec, u, v, cov: Covariates) -> np.ndarray:
    """Likelihood-ratio p-value per tau-model coefficient.

    Coefficient j is pinned to zero, the remaining coefficients are
    re-maximized, and 2*(ll_full - ll_restricted) is referred to a
    chi-squared(1) distribution.  These can differ from Wald-type values.
    """
    from scipy.stats import chi2

    if spec.family.kind == "independence":
        return np.array([])
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    model = spec.tau_model
    design = build_design(cov, model.kind, model.knots)
    nll = _neg_loglik_factory(spec.family, u, v, design, 0.0, None)
    ll_full = -nll(model.coef)
    pvals = np.empty(model.n_coef)
    for j in range(model.n_coef):
        free = [i for i in range(model.n_coef) if i != j]

        def nll_restricted(sub):
            beta = np.zeros(model.n_coef)
            beta[free] = sub
            return nll(beta)

        if free:
            sub0 = model.coef[free]
            res = minimize(nll_restricted, sub0, jac=_fd_gradient(nll_restricted),
                           method="BFGS", options={"gtol": 1e-6, "maxiter": 500})
            ll_restr = -min(nll_restricted(res.x), nll_restricted(sub0))
        else:
            ll_restr = -nll_restricted(np.array([]))
        lr = max(0.0, 2.0 * (ll_full - ll_restr))
        pvals[j] = float(chi2.sf(lr, df=1))
    return pvals


def _candidate_families(family_kinds, tau_emp):
    out = []
    for kind in family_kinds:
        if kind == "independence":
            continue
        if kind in ("gaussian", "frank"):
            out.append(fam.CopulaFamily(kind))
        elif kind == "studentt":
            out.extend(fam.CopulaFamily("studentt", df=d) for d in STUDENTT_DF_GRID)
        elif kind in ("clayton", "gumbel"):
            rots = (0, 180) if tau_emp >= 0.0 else (90, 270)
            out.extend(fam.CopulaFamily(kind, rotation=r) for r in rots)
        else:
            raise DomainError(f"unknown family kind {kind!r}")
    return out


def fit_pair(u, v, cov: Covariates, kind: str = "constant",
             family_kinds=DEFAULT_FAMILY_KINDS, n_basis: int = DEFAULT_N_BASIS,
             lambda_grid=LAMBDA_GRID) -> CopulaSpec:
    """Select family and fit tau-model coefficients for one pair-copula.

    Student-t profiles its df over a fixed grid (one extra BIC parameter);
    each Student-t df counts as its own candidate.  Returns Independence
    when n < 30 or when every parametric candidate fails numerically.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = len(u)
    if n < MIN_PAIR_N:
        return independence_spec(flag="too_few_observations")
    tau_emp = kendalltau(u, v).statistic
    if not np.isfinite(tau_emp):
        tau_emp = 0.0

    best = independence_spec()
    any_parametric = False
    for family in _candidate_families(family_kinds, tau_emp):
        fit = _fit_family_design(family, u, v, cov, kind, n_basis, lambda_grid, tau_emp)
        if fit is None:
            continue
        any_parametric = True
        tau_model, ll = fit
        n_params = tau_model.n_coef + (1 if family.kind == "studentt" else 0)
        bic = -2.0 * ll + n_params * np.log(n)
        if bic < best.bic:
            best = CopulaSpec(family, tau_model, loglik=float(ll),
                              n_params=n_params, bic=float(bic))
    if not any_parametric and best.family.kind == "independence":
        best.flag = "parametric_fits_failed"
    return best
