"""Train / predict / verify orchestration around the math core.

Stations are independent units of work: training loops over (station,
method) jobs, optionally across processes, and writes one JSON model per
job.  Prediction emits a long-format quantile CSV plus a sidecar meta
file carrying each method's training date range; verification refuses
prediction dates that intersect the training period.
"""

import json
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pandas as pd

from .config import EXTENDED_VARIABLES, RunConfig
from .data import ForecastDataset, rolling_window_mask
from .dvine import DVineModel, fit_dvqr, predict_quantile
from .emos import EmosModel, crps_normal, fit_emos, fit_emos_gb
from .errors import DomainError, FitError
from .margins import fit_margin, kde_fit
from .scores import (ScoreReport, bh_adjust, coverage_width, crps_ensemble,
                     crps_from_quantiles, dm_test, nominal_coverage_level,
                     point_scores, rank_histogram, verification_ranks)
from .serialize import load_model, save_model
from .simulate import simulate

METHODS = ("emos", "emos-gb", "dvqr", "gam-dvqr-c", "gam-dvqr-t1", "gam-dvqr-t2")

_GAM_DESIGNS = {"gam-dvqr-c": "constant", "gam-dvqr-t1": "linear_sincos",
                "gam-dvqr-t2": "cyclic_spline"}


def dataset_variables(ds: ForecastDataset, config: RunConfig) -> list:
    """Predictor columns of the configured variable set, present ones only."""
    if config.variable_set == "reduced":
        cols = ["mean_t2m", "sd_t2m"]
    else:
        cols = ([f"mean_{v}" for v in EXTENDED_VARIABLES]
                + [f"sd_{v}" for v in EXTENDED_VARIABLES])
    present = [c for c in cols if c in ds.frame.columns]
    if not present:
        raise DomainError(f"none of the {config.variable_set}-set columns are present")
    return present


def auto_margin_set(values: np.ndarray) -> str:
    if values.min() > 0.0 and values.max() < 1.0:
        return "B"
    if values.min() > 0.0:
        return "C"
    return "A"


def _fit_parametric_margin(values, cov, config):
    set_name = config.margin_set
    if set_name == "auto":
        set_name = auto_margin_set(values)
    return fit_margin(values, cov, candidates=set_name)


def train_station(train_ds: ForecastDataset, method: str, config: RunConfig):
    """Fit one method on one station's training slice."""
    obs_ds = train_ds.observed()
    y = obs_ds.column("obs")
    cov = obs_ds.covariates()

    if method == "emos":
        return fit_emos(y, obs_ds.column("mean_t2m"), obs_ds.column("sd_t2m"), cov,
                        loss=config.emos_loss, max_iter=config.emos_max_iter)
    if method == "emos-gb":
        cols = dataset_variables(obs_ds, config)
        names = cols + ["x_sin", "x_cos"]
        x_mat = np.column_stack([obs_ds.column(c) for c in cols] + [cov.u_sin, cov.u_cos])
        return fit_emos_gb(y, x_mat, names=names, loss=config.emos_gb_loss,
                           max_iter=config.emos_gb_max_iter, step=config.emos_gb_step,
                           stop=config.emos_gb_stop)

    cols = dataset_variables(obs_ds, config)
    # constant columns carry no rank information and break margin fitting
    cols = [c for c in cols if np.std(obs_ds.column(c)) > 0.0]
    if not cols:
        raise FitError("every candidate predictor column is constant")
    x_mat = np.column_stack([obs_ds.column(c) for c in cols])
    if method == "dvqr":
        response_margin = kde_fit(y)
        pred_margins = [kde_fit(x_mat[:, j]) for j in range(x_mat.shape[1])]
        design = "constant"
    elif method in _GAM_DESIGNS:
        response_margin = _fit_parametric_margin(y, cov, config)
        pred_margins = [_fit_parametric_margin(x_mat[:, j], cov, config)
                        for j in range(x_mat.shape[1])]
        design = _GAM_DESIGNS[method]
    else:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    return fit_dvqr(y, x_mat, cov, response_margin, pred_margins, names=cols,
                    design_kind=design, family_kinds=config.families,
                    max_predictors=config.max_predictors,
                    n_basis=config.n_spline_basis, meta={"variables": cols})


def _train_job(args):
    frame, report, station, method, cfg_kwargs = args
    config = RunConfig(**cfg_kwargs)
    ds = ForecastDataset(frame, report)
    model = train_station(ds, method, config)
    return station, method, model


def model_filename(method: str, station: str) -> str:
    return f"model_{method}_{station}.json"


def run_train(dataset: ForecastDataset, config: RunConfig, methods, out_dir,
              stations=None, workers: int = 1):
    """Fit the requested methods per station and persist them as JSON."""
    os.makedirs(out_dir, exist_ok=True)
    train_ds = dataset.between(config.train_start or None, config.train_end or None)
    stations = stations or train_ds.stations
    cfg_kwargs = {f: getattr(config, f) for f in config.__dataclass_fields__}

    jobs = []
    for station in stations:
        sub = train_ds.for_station(station)
        for method in methods:
            jobs.append((sub.frame, sub.report, station, method, cfg_kwargs))

    manifest = []
    skipped = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = []
            for job in jobs:
                results.append((job[2], job[3], pool.submit(_train_job, job)))
            for station, method, fut in results:
                try:
                    _, _, model = fut.result()
                except (FitError, DomainError) as exc:
                    skipped.append({"station": station, "method": method, "reason": str(exc)})
                    continue
                manifest.append(_persist(model, method, station, config, out_dir))
    else:
        for job in jobs:
            station, method = job[2], job[3]
            try:
                _, _, model = _train_job(job)
            except (FitError, DomainError) as exc:
                skipped.append({"station": station, "method": method, "reason": str(exc)})
                continue
            manifest.append(_persist(model, method, station, config, out_dir))

    doc = {"models": manifest, "skipped": skipped, "config_hash": config.config_hash()}
    with open(os.path.join(out_dir, "train_manifest.json"), "w") as fh:
        json.dump(doc, fh, indent=1)
    return doc


def _persist(model, method, station, config, out_dir):
    meta = {
        "method": method, "station": station,
        "train_start": config.train_start, "train_end": config.train_end,
        "config_hash": config.config_hash(), "seed": config.seed,
    }
    path = os.path.join(out_dir, model_filename(method, station))
    save_model(model, path, meta=meta)
    return {"path": os.path.basename(path), "method": method, "station": station}


def crps_alpha_levels(n_levels: int) -> np.ndarray:
    return np.arange(1, n_levels + 1) / (n_levels + 1.0)


def default_alpha_levels(config: RunConfig) -> np.ndarray:
    """CRPS grid plus the median and the nominal central-interval bounds."""
    level = nominal_coverage_level(config.ensemble_members)
    lo = (1.0 - level) / 2.0
    extra = np.array([lo, 0.5, 1.0 - lo])
    return np.unique(np.concatenate([crps_alpha_levels(config.crps_k), extra]))


def _predict_matrix(model: EmosModel, ds: ForecastDataset):
    cov = ds.covariates()
    if model.kind == "emos":
        return np.column_stack([cov.u_sin, cov.u_cos,
                                ds.column("mean_t2m"), ds.column("sd_t2m")])
    cols = []
    for name in model.names:
        if name == "x_sin":
            cols.append(cov.u_sin)
        elif name == "x_cos":
            cols.append(cov.u_cos)
        else:
            cols.append(ds.column(name))
    return np.column_stack(cols)


def _dvine_matrix(model: DVineModel, ds: ForecastDataset):
    cols = model.meta.get("variables")
    if cols is None:
        raise DomainError("dvine model lacks its variable list")
    return np.column_stack([ds.column(c) for c in cols]) if cols else \
        np.empty((len(ds), 0))


def predict_model(model, ds: ForecastDataset, alphas: np.ndarray) -> np.ndarray:
    """Quantile matrix (n_rows, n_levels) for one fitted model."""
    if isinstance(model, EmosModel):
        return model.quantile(_predict_matrix(model, ds), alphas)
    return predict_quantile(model, _dvine_matrix(model, ds), ds.covariates(), alphas)


def run_predict(models_dir, dataset: ForecastDataset, out_dir, alphas=None,
                methods=None, stations=None, config: RunConfig | None = None,
                train_dataset: ForecastDataset | None = None):
    """Emit one quantile row per (station, date, alpha) for each model."""
    config = config or RunConfig()
    os.makedirs(out_dir, exist_ok=True)
    if alphas is None:
        alphas = default_alpha_levels(config)
    alphas = np.asarray(sorted(set(np.round(np.asarray(alphas, dtype=float), 12))))

    rows = []
    meta = {"alphas": alphas.tolist(), "crps_k": config.crps_k,
            "ensemble_members": config.ensemble_members, "train_ranges": {}}
    for fname in sorted(os.listdir(models_dir)):
        if not (fname.startswith("model_") and fname.endswith(".json")):
            continue
        model, model_meta = load_model(os.path.join(models_dir, fname))
        method = model_meta.get("method", "unknown")
        station = model_meta.get("station", "unknown")
        if methods and method not in methods:
            continue
        if stations and station not in stations:
            continue
        sub = dataset.for_station(station)
        if len(sub) == 0:
            continue
        meta["train_ranges"][method] = [model_meta.get("train_start", ""),
                                        model_meta.get("train_end", "")]
        if method == "dvqr" and config.dvqr_rolling:
            if train_dataset is None:
                raise DomainError("rolling DVQR prediction needs the training dataset")
            q = _rolling_dvqr_quantiles(sub, train_dataset.for_station(station),
                                        alphas, config)
        else:
            q = predict_model(model, sub, alphas)
        dates = sub.frame["date"].dt.strftime("%Y-%m-%d").to_numpy()
        for i in range(q.shape[0]):
            for a_idx, a in enumerate(alphas):
                rows.append((station, dates[i], method, a, q[i, a_idx]))

    pred = pd.DataFrame(rows, columns=["station", "date", "method", "alpha", "quantile"])
    pred_path = os.path.join(out_dir, "predictions.csv")
    pred.to_csv(pred_path, index=False)
    with open(os.path.join(out_dir, "predictions.meta.json"), "w") as fh:
        json.dump(meta, fh, indent=1)
    return pred_path


def _rolling_dvqr_quantiles(test_ds: ForecastDataset, train_ds: ForecastDataset,
                            alphas, config: RunConfig):
    """Refit per forecast day on the refined rolling window, then predict."""
    cols = dataset_variables(train_ds, config)
    obs_train = train_ds.observed()
    out = np.empty((len(test_ds), len(alphas)))
    for i in range(len(test_ds)):
        t = test_ds.frame["date"].iloc[i]
        mask = rolling_window_mask(obs_train.frame["date"], t,
                                   config.window_n, config.window_years)
        window = ForecastDataset(obs_train.frame[mask].reset_index(drop=True))
        y = window.column("obs")
        x_mat = np.column_stack([window.column(c) for c in cols])
        try:
            response_margin = kde_fit(y)
            pred_margins = [kde_fit(x_mat[:, j]) for j in range(x_mat.shape[1])]
            model = fit_dvqr(y, x_mat, window.covariates(), response_margin,
                             pred_margins, names=cols, design_kind="constant",
                             family_kinds=config.families,
                             max_predictors=config.max_predictors,
                             meta={"variables": cols})
        except (FitError, DomainError):
            out[i] = np.nan
            continue
        row = test_ds.frame.iloc[[i]].reset_index(drop=True)
        row_ds = ForecastDataset(row)
        out[i] = predict_quantile(model, np.column_stack(
            [row_ds.column(c) for c in cols]), row_ds.covariates(), np.asarray(alphas))
    return out


# -- verification --------------------------------------------------------------

def _check_no_overlap(pred_dates, train_ranges):
    lo, hi = pd.Timestamp(pred_dates.min()), pd.Timestamp(pred_dates.max())
    for method, (start, end) in train_ranges.items():
        if not start or not end:
            continue
        t0, t1 = pd.Timestamp(start), pd.Timestamp(end)
        if lo <= t1 and hi >= t0:
            raise DomainError(
                f"verification range [{lo.date()}, {hi.date()}] intersects the "
                f"training range [{t0.date()}, {t1.date()}] of method {method}")


def run_verify(pred_path, dataset: ForecastDataset, out_dir, reference=None,
               models_dir=None, alpha: float = 0.05, n_members=None):
    """Score predictions against observations; write CSV/JSON reports."""
    os.makedirs(out_dir, exist_ok=True)
    pred = pd.read_csv(pred_path, dtype={"station": str})
    meta_path = str(pred_path).replace(".csv", ".meta.json")
    meta = {}
    if os.path.exists(meta_path):
        with open(meta_path) as fh:
            meta = json.load(fh)
    if meta.get("train_ranges"):
        _check_no_overlap(pd.to_datetime(pred["date"]), meta["train_ranges"])

    n_members = n_members or meta.get("ensemble_members", 50)
    level = nominal_coverage_level(n_members)
    lo_a, hi_a = (1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0
    crps_k = meta.get("crps_k", 100)
    crps_grid = crps_alpha_levels(crps_k)

    obs_frame = dataset.observed().frame
    obs_frame = obs_frame.assign(date=obs_frame["date"].dt.strftime("%Y-%m-%d"))
    gauss_models = _load_gaussian_models(models_dir) if models_dir else {}

    score_rows = []
    crps_series = {}
    pit_all = {}
    for (station, method), grp in pred.groupby(["station", "method"]):
        wide = grp.pivot_table(index="date", columns="alpha", values="quantile")
        merged = wide.join(
            obs_frame[obs_frame["station"] == station].set_index("date")["obs"],
            how="inner").dropna(subset=["obs"])
        if merged.empty:
            continue
        y = merged["obs"].to_numpy()
        alphas = np.asarray([c for c in wide.columns], dtype=float)
        q = merged[wide.columns].to_numpy(dtype=float)

        grid_idx = _match_levels(alphas, crps_grid)
        crps_vals = np.array([crps_from_quantiles(q[i, grid_idx], y[i])
                              for i in range(len(y))]) if grid_idx is not None else None
        med = _level_column(q, alphas, 0.5)
        mean_fc = q[:, grid_idx].mean(axis=1) if grid_idx is not None else med
        pit = np.clip([np.interp(y[i], q[i], alphas) for i in range(len(y))],
                      1e-6, 1 - 1e-6)

        key = (station, method)
        if key in gauss_models:
            sub = dataset.for_station(station)
            sub = sub.between(merged.index.min(), merged.index.max()).observed()
            if len(sub) == len(y):
                model = gauss_models[key]
                mu, sigma = model.mu_sigma(_predict_matrix(model, sub))
                crps_vals = crps_normal(mu, sigma, y)
                from scipy.special import ndtr
                pit = ndtr((y - mu) / sigma)
                med, mean_fc = mu, mu

        lo_q = _level_column(q, alphas, lo_a)
        hi_q = _level_column(q, alphas, hi_a)
        cover, width = coverage_width(lo_q, hi_q, y)
        mae, rmse = point_scores(med, mean_fc, y)
        if crps_vals is None:
            continue
        crps_series[(station, method)] = crps_vals
        pit_all.setdefault(method, []).append(pit)
        score_rows.append(ScoreReport(
            station=station, method=method, n_cases=len(y),
            mean_crps=float(np.mean(crps_vals)), mae=mae, rmse=rmse,
            coverage=cover, width=width, crps_series=crps_vals, pit=pit))

    _score_raw_ensemble(dataset, pred, crps_k, level, score_rows, crps_series, out_dir)

    if reference is not None:
        ref = {r.station: r.mean_crps for r in score_rows if r.method == reference}
        for r in score_rows:
            if r.method != reference and r.station in ref:
                r.crpss_ref = 1.0 - r.mean_crps / ref[r.station]
    scores = pd.DataFrame([r.row() for r in score_rows])
    scores_path = os.path.join(out_dir, "scores.csv")
    scores.to_csv(scores_path, index=False)

    dm_rows = _dm_bh_table(crps_series, alpha)
    pd.DataFrame(dm_rows).to_csv(os.path.join(out_dir, "dm_bh.csv"), index=False)

    _write_pit_hist(pit_all, out_dir)

    summary = {"methods": {}, "alpha": alpha, "nominal_coverage": 100.0 * level}
    if not scores.empty:
        for method, grp in scores.groupby("method"):
            summary["methods"][method] = {
                "crps": float(grp["crps"].mean()), "mae": float(grp["mae"].mean()),
                "rmse": float(grp["rmse"].mean()),
                "coverage": float(grp["coverage"].mean()),
                "width": float(grp["width"].mean()), "stations": int(len(grp))}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=1)
    return summary


def _match_levels(alphas, grid):
    idx = []
    for g in grid:
        j = int(np.argmin(np.abs(alphas - g)))
        if abs(alphas[j] - g) > 1e-9:
            return None
        idx.append(j)
    return np.asarray(idx)


def _level_column(q, alphas, level):
    j = int(np.argmin(np.abs(alphas - level)))
    if abs(alphas[j] - level) < 1e-9:
        return q[:, j]
    return np.array([np.interp(level, alphas, q[i]) for i in range(q.shape[0])])


def _load_gaussian_models(models_dir):
    out = {}
    for fname in sorted(os.listdir(models_dir)):
        if not (fname.startswith("model_") and fname.endswith(".json")):
            continue
        model, meta = load_model(os.path.join(models_dir, fname))
        if isinstance(model, EmosModel):
            out[(meta.get("station"), meta.get("method"))] = model
    return out


def _score_raw_ensemble(dataset, pred, crps_k, level, score_rows, crps_series, out_dir):
    member_cols = [c for c in dataset.frame.columns if c.startswith("ens_")]
    if not member_cols:
        return
    pred_dates = set(pred["date"].unique())
    lo_a, hi_a = (1.0 - level) / 2.0, 1.0 - (1.0 - level) / 2.0
    for station in dataset.stations:
        sub = dataset.for_station(station).observed()
        frame = sub.frame[sub.frame["date"].dt.strftime("%Y-%m-%d").isin(pred_dates)]
        if frame.empty:
            continue
        y = frame["obs"].to_numpy(dtype=float)
        members = frame[member_cols].to_numpy(dtype=float)
        crps_vals = np.array([crps_ensemble(members[i], y[i], crps_k)
                              for i in range(len(y))])
        med = np.median(members, axis=1)
        mean_fc = members.mean(axis=1)
        lo_q = np.quantile(members, lo_a, axis=1)
        hi_q = np.quantile(members, hi_a, axis=1)
        cover, width = coverage_width(lo_q, hi_q, y)
        mae, rmse = point_scores(med, mean_fc, y)
        crps_series[(station, "raw-ensemble")] = crps_vals
        score_rows.append(ScoreReport(
            station=station, method="raw-ensemble", n_cases=len(y),
            mean_crps=float(np.mean(crps_vals)), mae=mae, rmse=rmse,
            coverage=cover, width=width, crps_series=crps_vals))
        ranks = verification_ranks(y, members, seed=0)
        counts = rank_histogram(ranks, members.shape[1])
        pd.DataFrame({"rank": np.arange(1, len(counts) + 1), "count": counts}).to_csv(
            os.path.join(out_dir, f"rank_hist_{station}.csv"), index=False)


def _dm_bh_table(crps_series, alpha):
    methods = sorted({m for (_, m) in crps_series})
    stations = sorted({s for (s, _) in crps_series})
    rows = []
    for m1 in methods:
        for m2 in methods:
            if m1 >= m2:
                continue
            stats, pvals, used = [], [], []
            for s in stations:
                a = crps_series.get((s, m1))
                b = crps_series.get((s, m2))
                if a is None or b is None or len(a) != len(b) or len(a) < 30:
                    continue
                stat, p = dm_test(a, b, alternative="two-sided")
                stats.append(stat)
                pvals.append(p)
                used.append(s)
            if not pvals:
                continue
            reject = bh_adjust(np.asarray(pvals), alpha)
            for s, stat, p, rej in zip(used, stats, pvals, reject):
                rows.append({"method_a": m1, "method_b": m2, "station": s,
                             "dm_stat": stat, "p_value": p, "bh_reject": bool(rej)})
    return rows


def _write_pit_hist(pit_all, out_dir, n_bins: int = 20):
    rows = []
    edges = np.linspace(0.0, 1.0, n_bins + 1)
    for method, chunks in pit_all.items():
        pit = np.concatenate(chunks)
        counts, _ = np.histogram(pit, bins=edges)
        for b in range(n_bins):
            rows.append({"method": method, "bin_low": edges[b], "bin_high": edges[b + 1],
                         "count": int(counts[b])})
    if rows:
        pd.DataFrame(rows).to_csv(os.path.join(out_dir, "pit_hist.csv"), index=False)


def run_simulate(scenario: str, seed: int, out_dir, **kwargs):
    """Write a synthetic dataset CSV; byte-identical for identical inputs."""
    os.makedirs(out_dir, exist_ok=True)
    ds = simulate(scenario, seed=seed, **kwargs)
    out = ds.frame.copy()
    out["date"] = out["date"].dt.strftime("%Y-%m-%d")
    out = out.drop(columns=["obs_missing", "doy", "x_sin", "x_cos"])
    path = os.path.join(out_dir, f"{scenario}.csv")
    out.to_csv(path, index=False)
    return path
