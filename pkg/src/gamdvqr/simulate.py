"""Synthetic forecast datasets for acceptance scenarios and demos.

All generators are deterministic given their seed and return a normalized
:class:`ForecastDataset`.  The four scenarios are: a multivariate-normal
oracle (closed-form conditional quantiles exist), a Gaussian pair with a
seasonally varying Kendall's tau, an informative-predictor-among-noise
selection setup, and a calibrated exchangeable ensemble.
"""

import numpy as np
import pandas as pd

from . import families as fam
from .data import ForecastDataset, normalize_frame
from .errors import DomainError
from .taulink import Covariates, link_tau

SCENARIOS = ("gaussian-oracle", "time-varying-tau", "informative-subset",
             "calibrated-ensemble")

ORACLE_CORRELATION = np.array([
    [1.0, 0.6, 0.3, 0.1],
    [0.6, 1.0, 0.4, 0.2],
    [0.3, 0.4, 1.0, 0.15],
    [0.1, 0.2, 0.15, 1.0],
])

T1_ALPHA = (0.4, 0.5, -0.3)


def _dates(n, start="2015-01-01"):
    return pd.date_range(start, periods=n, freq="D")


def gaussian_oracle(n: int = 2000, seed: int = 0, correlation=None,
                    station: str = "S1") -> ForecastDataset:
    """(y, x1, x2, x3) jointly normal with a fixed correlation matrix."""
    corr = ORACLE_CORRELATION if correlation is None else np.asarray(correlation)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, corr.shape[0])) @ np.linalg.cholesky(corr).T
    frame = pd.DataFrame({
        "station": station, "date": _dates(n), "obs": z[:, 0],
        "mean_x1": z[:, 1], "mean_x2": z[:, 2], "mean_x3": z[:, 3],
        "sd_x1": 1.0, "sd_x2": 1.0, "sd_x3": 1.0,
    })
    return normalize_frame(frame, source=f"gaussian-oracle(seed={seed})")


def tau_profile_linear(cov: Covariates) -> np.ndarray:
    a0, a1, a2 = T1_ALPHA
    return link_tau(a0 + a1 * cov.u_sin + a2 * cov.u_cos)


def tau_profile_spline(cov: Covariates) -> np.ndarray:
    # second harmonic: outside the sin/cos span, within a cyclic spline's reach
    ang = 2.0 * np.pi * cov.doy / 365.25
    return link_tau(0.3 + 0.8 * np.sin(ang) + 0.5 * np.cos(2.0 * ang))


def time_varying_tau(n_years: int = 5, seed: int = 0, profile: str = "linear",
                     station: str = "S1") -> ForecastDataset:
    """Gaussian pair whose tau follows an annual profile; seasonal margins.

    y = 2 + 1.5 sin + 1.2 * PhiInv(v), x = 1 + sin + PhiInv(u) with (v, u)
    from a Gaussian copula at tau(doy).  ``profile`` is "linear" (the
    annual sin/cos shape) or "spline" (adds a second harmonic).
    """
    if profile not in ("linear", "spline"):
        raise DomainError("profile must be 'linear' or 'spline'")
    dates = _dates(int(n_years * 365))
    cov = Covariates(dates.dayofyear.to_numpy(dtype=float))
    tau = tau_profile_linear(cov) if profile == "linear" else tau_profile_spline(cov)
    gauss = fam.CopulaFamily("gaussian")
    eta = fam.tau_to_param(gauss, tau)
    rng = np.random.default_rng(seed)
    w = rng.random((2, len(dates)))
    v = w[0]
    u = fam.hfunc_inv(gauss, eta, 1, w[1], v)
    from scipy.special import ndtri
    y = 2.0 + 1.5 * cov.u_sin + 1.2 * ndtri(v)
    x = 1.0 + cov.u_sin + ndtri(np.asarray(u))
    spread = np.exp(0.1 + 0.25 * rng.standard_normal(len(dates)))
    frame = pd.DataFrame({
        "station": station, "date": dates, "obs": y,
        "mean_t2m": x, "sd_t2m": spread,
    })
    return normalize_frame(frame, source=f"time-varying-tau(seed={seed},{profile})")


def informative_subset(n: int = 2000, seed: int = 0, n_informative: int = 1,
                       tau: float = 0.6, station: str = "S1") -> ForecastDataset:
    """One informative predictor (Gaussian copula at ``tau``) among noise.

    With ``n_informative=0`` all three predictors are independent of the
    response and the fitted vine should stay empty.
    """
    if n_informative not in (0, 1):
        raise DomainError("n_informative must be 0 or 1")
    rng = np.random.default_rng(seed)
    gauss = fam.CopulaFamily("gaussian")
    from scipy.special import ndtri
    v = rng.random(n)
    if n_informative == 1:
        u1 = fam.hfunc_inv(gauss, fam.tau_to_param(gauss, tau), 1, rng.random(n), v)
    else:
        u1 = rng.random(n)
    frame = pd.DataFrame({
        "station": station, "date": _dates(n), "obs": ndtri(v),
        "mean_x1": ndtri(np.asarray(u1)),
        "mean_x2": ndtri(rng.random(n)),
        "mean_x3": ndtri(rng.random(n)),
        "sd_x1": 1.0, "sd_x2": 1.0, "sd_x3": 1.0,
    })
    return normalize_frame(frame, source=f"informative-subset(seed={seed},k={n_informative})")


def calibrated_ensemble(n: int = 5000, n_members: int = 10, seed: int = 0,
                        station: str = "S1") -> ForecastDataset:
    """Observation and members exchangeable draws from the same Gaussian."""
    rng = np.random.default_rng(seed)
    dates = _dates(n)
    cov = Covariates(dates.dayofyear.to_numpy(dtype=float))
    mu = 2.0 + 1.5 * cov.u_sin
    sigma = np.exp(0.1 + 0.2 * cov.u_cos)
    draws = mu[:, None] + sigma[:, None] * rng.standard_normal((n, n_members + 1))
    frame = pd.DataFrame({"station": station, "date": dates, "obs": draws[:, 0]})
    for j in range(n_members):
        frame[f"ens_{j + 1}"] = draws[:, j + 1]
    frame["true_mu"] = mu
    frame["true_sigma"] = sigma
    return normalize_frame(frame, source=f"calibrated-ensemble(seed={seed})")


def simulate(scenario: str, seed: int = 0, **kwargs) -> ForecastDataset:
    if scenario == "gaussian-oracle":
        return gaussian_oracle(seed=seed, **kwargs)
    if scenario == "time-varying-tau":
        return time_varying_tau(seed=seed, **kwargs)
    if scenario == "informative-subset":
        return informative_subset(seed=seed, **kwargs)
    if scenario == "calibrated-ensemble":
        return calibrated_ensemble(seed=seed, **kwargs)
    raise DomainError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
