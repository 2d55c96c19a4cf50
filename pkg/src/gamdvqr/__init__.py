"""D-vine copula quantile regression with covariate-dependent Kendall's tau,
EMOS/EMOS-GB benchmarks, and probabilistic forecast verification."""

from ._backend import BACKEND
from .config import RunConfig, load_config
from .data import ForecastDataset, derive_variables, ingest_csv
from .dvine import (DVineModel, conditional_cdf, fit_dvqr, model_cll,
                    predict_quantile)
from .emos import (EmosModel, crps_normal, fit_emos, fit_emos_gb,
                   grid_search_emos_gb, predict_emos)
from .errors import ConvergenceError, DomainError, FitError
from .families import (CopulaFamily, copula_cdf, copula_logpdf, copula_pdf,
                       copula_sample, hfunc, hfunc_inv, param_to_tau,
                       tau_to_param)
from .margins import (MarginModel, fit_margin, kde_fit, margin_cdf,
                      margin_quantile)
from .pairfit import CopulaSpec, coefficient_pvalues, fit_pair, pair_loglik
from .scores import (bh_adjust, contour_grid, coverage_width,
                     crps_quantile_approx, crpss, dm_test,
                     nominal_coverage_level, point_scores)
from .serialize import load_model, save_model
from .simulate import simulate
from .taulink import Covariates, TauModel, link_tau, predict_tau

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "CopulaFamily", "tau_to_param", "param_to_tau", "copula_cdf", "copula_pdf",
    "copula_logpdf", "hfunc", "hfunc_inv", "copula_sample",
    "Covariates", "TauModel", "link_tau", "predict_tau",
    "CopulaSpec", "fit_pair", "pair_loglik", "coefficient_pvalues",
    "MarginModel", "fit_margin", "kde_fit", "margin_cdf", "margin_quantile",
    "DVineModel", "fit_dvqr", "conditional_cdf", "predict_quantile", "model_cll",
    "EmosModel", "fit_emos", "fit_emos_gb", "grid_search_emos_gb",
    "predict_emos", "crps_normal",
    "crps_quantile_approx", "point_scores", "crpss", "coverage_width",
    "dm_test", "bh_adjust", "contour_grid", "nominal_coverage_level",
    "ForecastDataset", "ingest_csv", "derive_variables", "simulate",
    "save_model", "load_model", "RunConfig", "load_config",
    "DomainError", "ConvergenceError", "FitError",
]
