"""Univariate marginal models.

Two kinds are provided: seasonal parametric distributions, where the
location follows a0 + a1*sin + a2*cos and the log-scale b0 + b1*sin +
b2*cos while any shape parameters stay constant, and Gaussian-kernel KDE
margins for the baseline vine regression.  Both expose cdf (the PIT) and
quantile (inverse PIT).

Parametric candidates combine a body (normal, skew-normal, skew-t, beta)
with a data transform (none, log, logit); the sets ``CANDIDATE_SETS``
group them by support the way positive or unit-interval variables are
usually handled.  Selection is by BIC on the original data scale, so the
transform jacobians are part of every likelihood.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import minimize
from scipy.special import expit, logit as sp_logit
from scipy.stats import beta as beta_dist, norm, skewnorm, t as student_t

from .errors import DomainError, FitError
from .taulink import Covariates

FAMILIES = ("normal", "skewnormal", "skewt", "beta")
TRANSFORMS = ("none", "log", "logit")

CANDIDATE_SETS = {
    "A": (("normal", "none"), ("skewnormal", "none"), ("skewt", "none")),
    "B": (("normal", "logit"), ("skewnormal", "logit"), ("skewt", "logit"), ("beta", "none")),
    "C": (("normal", "log"), ("skewnormal", "log"), ("skewt", "log")),
}

MIN_FIT_N = 50
MIN_KDE_N = 10
_KDE_GRID_N = 512
_SKEWT_GRID_N = 4001


def _transform_forward(y, transform):
    if transform == "none":
        return np.asarray(y, dtype=float)
    if transform == "log":
        return np.log(y)
    return sp_logit(y)


def _transform_inverse(z, transform):
    if transform == "none":
        return z
    if transform == "log":
        return np.exp(z)
    return expit(z)


def _transform_logjac(y, transform):
    if transform == "none":
        return 0.0
    if transform == "log":
        return -np.log(y)
    return -np.log(y) - np.log1p(-y)


def _support(family, transform):
    if family == "beta" or transform == "logit":
        return (0.0, 1.0)
    if transform == "log":
        return (0.0, np.inf)
    return (-np.inf, np.inf)


def _margin_design(cov: Covariates) -> np.ndarray:
    return np.column_stack([np.ones(len(cov)), cov.u_sin, cov.u_cos])


class _SkewTStd:
    """Standardized skew-t: 2 * t_df(w) * T_{df+1}(skew * w * sqrt((df+1)/(df+w^2))).

    The CDF has no closed form; it is tabulated once on a t-quantile-warped
    grid and both directions are served by monotone interpolation, so cdf
    and ppf are exact mutual inverses.
    """

    def __init__(self, skew: float, df: float):
        self.skew = skew
        self.df = df
        self._cdf_ip = None
        self._ppf_ip = None

    def logpdf(self, w):
        w = np.asarray(w, dtype=float)
        arg = self.skew * w * np.sqrt((self.df + 1.0) / (self.df + w * w))
        return (np.log(2.0) + student_t.logpdf(w, self.df)
                + student_t.logcdf(arg, self.df + 1.0))

    def _build(self):
        probs = np.linspace(1e-9, 1.0 - 1e-9, _SKEWT_GRID_N)
        grid = student_t.ppf(probs, self.df)
        dens = np.exp(self.logpdf(grid))
        cum = np.concatenate([[0.0], np.cumsum(np.diff(grid) * 0.5 * (dens[1:] + dens[:-1]))])
        cum /= cum[-1]
        keep = np.concatenate([[True], np.diff(cum) > 1e-15])
        grid, cum = grid[keep], cum[keep]
        self._cdf_ip = PchipInterpolator(grid, cum, extrapolate=False)
        self._ppf_ip = PchipInterpolator(cum, grid, extrapolate=False)
        self._lo, self._hi = grid[0], grid[-1]

    def cdf(self, w):
        if self._cdf_ip is None:
            self._build()
        w = np.asarray(w, dtype=float)
        out = self._cdf_ip(np.clip(w, self._lo, self._hi))
        return np.clip(out, 1e-12, 1.0 - 1e-12)

    def ppf(self, p):
        if self._ppf_ip is None:
            self._build()
        p = np.clip(np.asarray(p, dtype=float), 1e-12, 1.0 - 1e-12)
        return self._ppf_ip(np.clip(p, 1e-9, 1.0 - 1e-9))


@dataclass
class MarginModel:
    """A fitted margin; either seasonal-parametric or a KDE."""

    kind: str                       # "parametric" | "kde"
    family: str | None = None
    transform: str | None = None
    a: np.ndarray | None = None     # location coefficients (1, sin, cos)
    b: np.ndarray | None = None     # log-scale (or logit-scale) coefficients
    shape: dict = field(default_factory=dict)
    samples: np.ndarray | None = None
    bandwidth: float | None = None
    loglik: float | None = None
    bic: float | None = None
    n_params: int = 0
    n_train: int = 0
    _skewt_cache: _SkewTStd | None = field(default=None, repr=False, compare=False)
    _kde_grid: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def support(self):
        if self.kind == "kde":
            return (-np.inf, np.inf)
        return _support(self.family, self.transform)

    # -- parametric internals --

    def _mu_sigma(self, cov: Covariates):
        x = _margin_design(cov)
        if self.family == "beta":
            return expit(x @ self.a), expit(x @ self.b)
        return x @ self.a, np.exp(x @ self.b)

    def _std(self):
        if self.family == "skewt":
            if self._skewt_cache is None or (self._skewt_cache.skew, self._skewt_cache.df) != (
                    self.shape["skew"], self.shape["df"]):
                self._skewt_cache = _SkewTStd(self.shape["skew"], self.shape["df"])
            return self._skewt_cache
        if self.family == "skewnormal":
            return skewnorm(self.shape["skew"])
        return norm()

    def _check_domain(self, y):
        lo, hi = self.support
        if np.any((y <= lo) | (y >= hi)):
            raise DomainError(
                f"value outside the open support ({lo}, {hi}) of the {self.transform or ''}"
                f" {self.family} margin")

    # -- public surface --

    def logpdf(self, y, cov: Covariates):
        y = np.asarray(y, dtype=float)
        if self.kind == "kde":
            return np.log(np.maximum(self._kde_pdf(y), 1e-300))
        self._check_domain(y)
        mu, sigma = self._mu_sigma(cov)
        if self.family == "beta":
            p, q = _beta_pq(mu, sigma)
            return beta_dist.logpdf(y, p, q)
        z = _transform_forward(y, self.transform)
        w = (z - mu) / sigma
        return self._std().logpdf(w) - np.log(sigma) + _transform_logjac(y, self.transform)

    def cdf(self, y, cov: Covariates):
        y = np.asarray(y, dtype=float)
        if self.kind == "kde":
            return self._kde_cdf(y)
        self._check_domain(y)
        mu, sigma = self._mu_sigma(cov)
        if self.family == "beta":
            p, q = _beta_pq(mu, sigma)
            return beta_dist.cdf(y, p, q)
        w = (_transform_forward(y, self.transform) - mu) / sigma
        return self._std().cdf(w)

    def quantile(self, p, cov: Covariates):
        p = np.asarray(p, dtype=float)
        if np.any((p <= 0.0) | (p >= 1.0)):
            raise DomainError("quantile level must lie in (0, 1)")
        if self.kind == "kde":
            return self._kde_quantile(p)
        mu, sigma = self._mu_sigma(cov)
        if self.family == "beta":
            pp, qq = _beta_pq(mu, sigma)
            return beta_dist.ppf(p, pp, qq)
        w = self._std().ppf(p)
        return _transform_inverse(mu + sigma * w, self.transform)

    # -- KDE internals --

    def _kde_cdf(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.empty_like(y)
        step = max(1, int(2e6 // max(len(self.samples), 1)))
        for i in range(0, len(y), step):
            blk = y[i:i + step]
            out[i:i + step] = norm.cdf(
                (blk[:, None] - self.samples[None, :]) / self.bandwidth).mean(axis=1)
        return out

    def _kde_pdf(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        return norm.pdf(
            (y[:, None] - self.samples[None, :]) / self.bandwidth).mean(axis=1) / self.bandwidth

    def _kde_quantile(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if self._kde_grid is None:
            lo = self.samples.min() - 8.0 * self.bandwidth
            hi = self.samples.max() + 8.0 * self.bandwidth
            grid = np.linspace(lo, hi, _KDE_GRID_N)
            self._kde_grid = (grid, self._kde_cdf(grid))
        grid, cdf_grid = self._kde_grid
        y = np.interp(p, cdf_grid, grid)
        lo = np.full_like(y, grid[0])
        hi = np.full_like(y, grid[-1])
        # safeguarded Newton on the exact kernel CDF
        for _ in range(60):
            f = self._kde_cdf(y) - p
            lo = np.where(f < 0, y, lo)
            hi = np.where(f > 0, y, hi)
            d = np.maximum(self._kde_pdf(y), 1e-300)
            step_y = f / d
            y_new = y - step_y
            bad = (y_new <= lo) | (y_new >= hi)
            y_new = np.where(bad, 0.5 * (lo + hi), y_new)
            if np.max(np.abs(y_new - y)) < 1e-10:
                y = y_new
                break
            y = y_new
        return y


def _beta_pq(mu, sigma):
    ratio = (1.0 - sigma**2) / sigma**2
    return mu * ratio, (1.0 - mu) * ratio


def margin_cdf(model: MarginModel, y, cov: Covariates):
    return model.cdf(y, cov)


def margin_quantile(model: MarginModel, p, cov: Covariates):
    return model.quantile(p, cov)


# -- estimation ----------------------------------------------------------------

def _compress_unit(y):
    # Smithson-Verkuilen squeeze for data touching the unit-interval bounds
    n = len(y)
    return (y * (n - 1) + 0.5) / n


def _pack_init(y_t, family):
    a = np.array([np.mean(y_t), 0.0, 0.0])
    b = np.array([np.log(max(np.std(y_t), 1e-8)), 0.0, 0.0])
    if family == "skewnormal":
        return np.concatenate([a, b, [0.0]])
    if family == "skewt":
        return np.concatenate([a, b, [0.0, np.log(10.0 - 2.0)]])
    return np.concatenate([a, b])


def _beta_init(y):
    mu = float(np.clip(np.mean(y), 1e-3, 1 - 1e-3))
    var = float(np.var(y))
    sig = float(np.clip(np.sqrt(var / (mu * (1 - mu))), 1e-3, 1 - 1e-3))
    return np.concatenate([[sp_logit(mu), 0.0, 0.0], [sp_logit(sig), 0.0, 0.0]])


def _unpack(theta, family):
    a, b = theta[:3], theta[3:6]
    if family == "skewnormal":
        return a, b, {"skew": float(theta[6])}
    if family == "skewt":
        return a, b, {"skew": float(theta[6]), "df": float(2.0 + np.exp(theta[7]))}
    return a, b, {}


def _n_free_params(family):
    return {"normal": 6, "beta": 6, "skewnormal": 7, "skewt": 8}[family]


def fit_margin(samples, cov: Covariates, candidates="A") -> MarginModel:
    """Fit seasonal parametric margins by ML and select the BIC-best candidate.

    ``candidates`` is a set name from ``CANDIDATE_SETS`` or an iterable of
    (family, transform) pairs.
    """
    y = np.asarray(samples, dtype=float)
    n = len(y)
    if n < MIN_FIT_N:
        raise FitError(f"need at least {MIN_FIT_N} observations, got {n}")
    if len(cov) != n:
        raise DomainError("covariates must match sample length")
    if isinstance(candidates, str):
        candidates = CANDIDATE_SETS[candidates]

    design = _margin_design(cov)
    best = None
    failures = []
    for family, transform in candidates:
        try:
            model = _fit_one(y, cov, design, family, transform, n)
        except (ValueError, FloatingPointError) as exc:
            failures.append(f"{transform}+{family}: {exc}")
            continue
        if model is None:
            failures.append(f"{transform}+{family}: likelihood not finite")
            continue
        if best is None or model.bic < best.bic:
            best = model
    if best is None:
        raise FitError("all margin candidates failed: " + "; ".join(failures))
    return best


def _fit_one(y, cov, design, family, transform, n):
    y_fit = y
    if family == "beta" or transform == "logit":
        if y.min() <= 0.0 or y.max() >= 1.0:
            if y.min() < 0.0 or y.max() > 1.0:
                raise ValueError("data outside [0, 1]")
            y_fit = _compress_unit(y)
    if transform == "log" and y.min() <= 0.0:
        raise ValueError("data not strictly positive")

    if family == "beta":
        logjac = 0.0
        theta0 = _beta_init(y_fit)

        def nll(theta):
            mu = expit(design @ theta[:3])
            sig = np.clip(expit(design @ theta[3:6]), 1e-6, 1 - 1e-6)
            p, q = _beta_pq(mu, sig)
            val = beta_dist.logpdf(y_fit, p, q).sum()
            return -val if np.isfinite(val) else 1e10
    else:
        z = _transform_forward(y_fit, transform)
        logjac = float(np.sum(_transform_logjac(y_fit, transform)))
        theta0 = _pack_init(z, family)

        def nll(theta):
            a, b, shape = _unpack(theta, family)
            mu = design @ a
            sigma = np.exp(np.clip(design @ b, -30.0, 30.0))
            w = (z - mu) / sigma
            if family == "normal":
                lp = norm.logpdf(w)
            elif family == "skewnormal":
                lp = skewnorm.logpdf(w, shape["skew"])
            else:
                lp = _SkewTStd(shape["skew"], shape["df"]).logpdf(w)
            val = np.sum(lp - np.log(sigma))
            return -val if np.isfinite(val) else 1e10

    res = minimize(nll, theta0, method="BFGS", options={"gtol": 1e-7, "maxiter": 500})
    theta = res.x if nll(res.x) <= nll(theta0) else theta0
    neg = nll(theta)
    if not np.isfinite(neg) or neg >= 1e10:
        return None
    loglik = -neg + logjac
    k = _n_free_params(family)
    if family == "beta":
        a, b, shape = theta[:3], theta[3:6], {}
    else:
        a, b, shape = _unpack(theta, family)
    return MarginModel(
        kind="parametric", family=family, transform=transform,
        a=np.asarray(a, dtype=float), b=np.asarray(b, dtype=float), shape=shape,
        loglik=float(loglik), bic=float(-2.0 * loglik + k * np.log(n)),
        n_params=k, n_train=n)


def kde_fit(samples) -> MarginModel:
    """Gaussian-kernel KDE margin with Silverman's rule-of-thumb bandwidth."""
    y = np.asarray(samples, dtype=float)
    n = len(y)
    if n < MIN_KDE_N:
        raise FitError(f"need at least {MIN_KDE_N} observations for a KDE margin, got {n}")
    sd = float(np.std(y, ddof=1))
    iqr = float(np.subtract(*np.percentile(y, [75, 25])))
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0.0:
        raise FitError("zero-variance sample")
    h = 0.9 * spread * n ** (-0.2)
    return MarginModel(kind="kde", samples=y.copy(), bandwidth=float(h), n_train=n)
