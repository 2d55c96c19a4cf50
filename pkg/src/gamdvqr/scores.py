"""Proper scores, calibration diagnostics and significance testing.

CRPS is computed from K equally spaced quantiles of the predictive
distribution when only a quantile function is available, and in closed
form for Gaussian forecasts (see :mod:`gamdvqr.emos`).  Station-level
score series feed Diebold-Mariano tests whose p-values are pooled with
the Benjamini-Hochberg step-up rule.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from . import families as fam
from .errors import DomainError
from .pairfit import CopulaSpec
from .taulink import Covariates

DEFAULT_CRPS_K = 100


def crps_from_quantiles(z, y):
    """CRPS approximation from quantiles z_k = F^{-1}(k/(K+1)), k=1..K.

    (1/K) sum |z_k - y|  -  (1/(2K^2)) sum_{k,k'} |z_k - z_k'|; the double
    sum uses the sorted-rank identity instead of the O(K^2) loop.
    """
    z = np.sort(np.asarray(z, dtype=float))
    k = z.shape[0]
    if k < 2:
        raise DomainError("need at least two quantiles")
    term1 = np.mean(np.abs(z - y))
    ranks = 2.0 * np.arange(1, k + 1) - k - 1.0
    term2 = np.sum(ranks * z) / k**2
    return float(term1 - term2)


def crps_quantile_approx(quantile_fn, y, n_levels: int = DEFAULT_CRPS_K):
    """CRPS of a forecast given only its quantile function."""
    if n_levels < 2:
        raise DomainError("K must be at least 2")
    levels = np.arange(1, n_levels + 1) / (n_levels + 1.0)
    z = np.asarray(quantile_fn(levels), dtype=float)
    return crps_from_quantiles(z, float(y))


def crps_ensemble(members, y, n_levels: int = DEFAULT_CRPS_K):
    """CRPS of a raw ensemble via its empirical quantile function."""
    members = np.asarray(members, dtype=float)
    levels = np.arange(1, n_levels + 1) / (n_levels + 1.0)
    return crps_from_quantiles(np.quantile(members, levels), float(y))


def point_scores(medians, means, obs):
    """(MAE of the predictive medians, RMSE of the predictive means)."""
    medians = np.asarray(medians, dtype=float)
    means = np.asarray(means, dtype=float)
    obs = np.asarray(obs, dtype=float)
    if medians.shape != obs.shape or means.shape != obs.shape:
        raise DomainError("forecast and observation lengths differ")
    mae = float(np.mean(np.abs(medians - obs)))
    rmse = float(np.sqrt(np.mean((means - obs) ** 2)))
    return mae, rmse


def crpss(mean_crps, mean_crps_ref):
    """Skill score 1 - CRPS/CRPS_ref; positive means better than reference."""
    return 1.0 - mean_crps / mean_crps_ref


def nominal_coverage_level(n_members: int) -> float:
    """Central-interval level matching an m-member ensemble: (m-1)/(m+1)."""
    return (n_members - 1.0) / (n_members + 1.0)


def verification_ranks(obs, members, seed: int | None = 0):
    """Rank of each observation among its ensemble members, ties randomized.

    Returns ranks in {1, ..., m+1}.
    """
    obs = np.asarray(obs, dtype=float)
    members = np.atleast_2d(np.asarray(members, dtype=float))
    if members.shape[0] != obs.shape[0]:
        raise DomainError("one member row per observation required")
    rng = np.random.default_rng(seed)
    below = np.sum(members < obs[:, None], axis=1)
    ties = np.sum(members == obs[:, None], axis=1)
    extra = np.where(ties > 0, rng.integers(0, ties + 1), 0)
    return (below + extra + 1).astype(int)


def rank_histogram(ranks, n_members: int):
    counts = np.bincount(np.asarray(ranks, dtype=int), minlength=n_members + 2)[1:]
    return counts[:n_members + 1]


def coverage_width(lower_q, upper_q, obs):
    """(% of observations inside [lower, upper], mean interval width)."""
    lower_q = np.asarray(lower_q, dtype=float)
    upper_q = np.asarray(upper_q, dtype=float)
    obs = np.asarray(obs, dtype=float)
    inside = (obs >= lower_q) & (obs <= upper_q)
    return float(100.0 * np.mean(inside)), float(np.mean(upper_q - lower_q))


def dm_test(scores_a, scores_b, alternative: str = "two-sided", hac_lag: int = 0):
    """Diebold-Mariano test on the score difference d = s_A - s_B.

    The variance is lag-0 by default (daily 24h errors treated as
    uncorrelated); ``hac_lag`` > 0 switches to a Bartlett-kernel HAC
    estimate for sensitivity checks.  Normal reference distribution.
    ``alternative``: "two-sided", "less" (A better), or "greater".
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape:
        raise DomainError("score series must have equal length")
    n = a.shape[0]
    if n < 30:
        raise DomainError(f"DM test needs n >= 30, got {n}")
    d = a - b
    dbar = float(np.mean(d))
    if hac_lag <= 0:
        var = float(np.var(d, ddof=1))
    else:
        dc = d - dbar
        var = float(np.mean(dc * dc))
        for lag in range(1, hac_lag + 1):
            w = 1.0 - lag / (hac_lag + 1.0)
            var += 2.0 * w * float(np.mean(dc[lag:] * dc[:-lag]))
        var *= n / (n - 1.0)
    if var <= 0.0:
        return 0.0, 1.0
    stat = np.sqrt(n) * dbar / np.sqrt(var)
    if alternative == "two-sided":
        p = 2.0 * (1.0 - ndtr(abs(stat)))
    elif alternative == "less":
        p = float(ndtr(stat))
    elif alternative == "greater":
        p = float(1.0 - ndtr(stat))
    else:
        raise DomainError(f"unknown alternative {alternative!r}")
    return float(stat), float(min(p, 1.0))


def bh_adjust(p_values, alpha: float = 0.05):
    """Benjamini-Hochberg step-up: reject all p_(i) with i <= i*.

    i* = max{i : p_(i) <= i * alpha / m}; returns a boolean rejection mask
    aligned with the input order.
    """
    p = np.asarray(p_values, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise DomainError("p-values must lie in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    m = p.shape[0]
    order = np.argsort(p, kind="stable")
    thresh = np.arange(1, m + 1) * alpha / m
    ok = p[order] <= thresh
    reject = np.zeros(m, dtype=bool)
    if np.any(ok):
        i_star = int(np.max(np.nonzero(ok)[0]))
        reject[order[:i_star + 1]] = True
    return reject


def contour_grid(spec: CopulaSpec, cov_row: Covariates, grid_n: int = 100,
                 z_max: float = 3.0):
    """Normalized contour density d(z1, z2) = c(Phi(z1), Phi(z2)) phi(z1) phi(z2).

    Returns (z_grid, matrix) with matrix[i, j] = d(z_grid[i], z_grid[j]);
    the copula parameter is evaluated at the single covariate row given.
    """
    if len(cov_row) != 1:
        raise DomainError("contour_grid expects a single covariate row")
    z = np.linspace(-z_max, z_max, grid_n)
    uu = ndtr(z)
    eta = float(np.atleast_1d(spec.eta_values(cov_row))[0])
    u1, u2 = np.meshgrid(uu, uu, indexing="ij")
    dens = np.exp(fam.copula_logpdf(spec.family, eta, u1.ravel(), u2.ravel()))
    phi = np.exp(-0.5 * z * z) / np.sqrt(2.0 * np.pi)
    return z, dens.reshape(grid_n, grid_n) * phi[:, None] * phi[None, :]


@dataclass
class ScoreReport:
    """Aggregate verification results for one (station, method) cell."""

    station: str
    method: str
    n_cases: int
    mean_crps: float
    mae: float
    rmse: float
    coverage: float
    width: float
    crpss_ref: float | None = None
    crps_series: np.ndarray | None = field(default=None, repr=False)
    pit: np.ndarray | None = field(default=None, repr=False)

    def row(self):
        return {
            "station": self.station, "method": self.method, "n": self.n_cases,
            "crps": self.mean_crps, "mae": self.mae, "rmse": self.rmse,
            "coverage": self.coverage, "width": self.width,
            "crpss": self.crpss_ref if self.crpss_ref is not None else "",
        }
