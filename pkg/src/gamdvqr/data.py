"""Forecast dataset handling: CSV ingestion, derived variables, windowing.

A dataset is a per-station, per-date table with the observation, ensemble
summary columns ``mean_<var>`` / ``sd_<var>``, optional raw member columns
``ens_1..ens_m`` for the target variable, and the temporal covariates
(day of year plus its annual sin/cos).  Missing observations are flagged,
never dropped; likelihoods and scores skip them explicitly.
"""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import DomainError
from .taulink import YEAR_DAYS, Covariates

REQUIRED_COLUMNS = ("station", "date", "obs")


@dataclass
class ForecastDataset:
    frame: pd.DataFrame
    report: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.frame)

    @property
    def stations(self):
        return sorted(self.frame["station"].unique().tolist())

    @property
    def member_columns(self):
        return [c for c in self.frame.columns if c.startswith("ens_")]

    def for_station(self, station) -> "ForecastDataset":
        sub = self.frame[self.frame["station"] == station].reset_index(drop=True)
        return ForecastDataset(sub, dict(self.report, station=station))

    def between(self, start=None, end=None) -> "ForecastDataset":
        mask = pd.Series(True, index=self.frame.index)
        if start is not None:
            mask &= self.frame["date"] >= pd.Timestamp(start)
        if end is not None:
            mask &= self.frame["date"] <= pd.Timestamp(end)
        return ForecastDataset(self.frame[mask].reset_index(drop=True), dict(self.report))

    def observed(self) -> "ForecastDataset":
        mask = ~self.frame["obs_missing"]
        return ForecastDataset(self.frame[mask].reset_index(drop=True), dict(self.report))

    def covariates(self) -> Covariates:
        return Covariates(self.frame["doy"].to_numpy(dtype=float))

    def column(self, name) -> np.ndarray:
        if name not in self.frame.columns:
            raise DomainError(f"column {name!r} not present")
        return self.frame[name].to_numpy(dtype=float)

    def members_matrix(self) -> np.ndarray:
        cols = self.member_columns
        if not cols:
            raise DomainError("no ensemble member columns present")
        return self.frame[cols].to_numpy(dtype=float)


def _annual_sincos(doy):
    ang = 2.0 * np.pi * doy / YEAR_DAYS
    return np.sin(ang), np.cos(ang)


def normalize_frame(frame: pd.DataFrame, source: str = "<memory>") -> ForecastDataset:
    """Validate and normalize a raw table into a ForecastDataset."""
    frame = frame.copy()
    for c in REQUIRED_COLUMNS:
        if c not in frame.columns:
            raise DomainError(f"{source}: missing required column {c!r}")

    dates = pd.to_datetime(frame["date"], format="ISO8601", errors="coerce")
    bad = np.nonzero(dates.isna().to_numpy())[0]
    if bad.size:
        raise DomainError(f"{source}: malformed date on line {int(bad[0]) + 2}")
    frame["date"] = dates
    frame["station"] = frame["station"].astype(str)

    dup = frame.duplicated(subset=["station", "date"])
    if dup.any():
        line = int(np.nonzero(dup.to_numpy())[0][0]) + 2
        raise DomainError(f"{source}: duplicate (station, date) on line {line}")

    frame["obs"] = pd.to_numeric(frame["obs"], errors="coerce")
    frame["obs_missing"] = frame["obs"].isna()

    member_cols = sorted([c for c in frame.columns if c.startswith("ens_")],
                         key=lambda c: int(c.split("_")[1]))
    if member_cols:
        if len(member_cols) < 2:
            raise DomainError(f"{source}: ensembles need at least 2 members")
        members = frame[member_cols].to_numpy(dtype=float)
        if "mean_t2m" not in frame.columns:
            frame["mean_t2m"] = members.mean(axis=1)
        if "sd_t2m" not in frame.columns:
            frame["sd_t2m"] = members.std(axis=1, ddof=1)

    for c in frame.columns:
        if c.startswith("sd_"):
            vals = pd.to_numeric(frame[c], errors="coerce")
            if (vals < 0).any():
                raise DomainError(f"{source}: negative values in {c}")

    doy = frame["date"].dt.dayofyear.to_numpy(dtype=float)
    frame["doy"] = doy
    x_sin, x_cos = _annual_sincos(doy)
    if "x_sin" in frame.columns:
        if np.nanmax(np.abs(frame["x_sin"].to_numpy(dtype=float) - x_sin)) > 1e-6:
            raise DomainError(f"{source}: x_sin inconsistent with date-derived day of year")
    frame["x_sin"] = x_sin
    frame["x_cos"] = x_cos

    frame = frame.sort_values(["station", "date"]).reset_index(drop=True)
    report = {
        "source": source,
        "rows": int(len(frame)),
        "stations": int(frame["station"].nunique()),
        "missing_obs": int(frame["obs_missing"].sum()),
        "columns": [c for c in frame.columns],
    }
    return ForecastDataset(frame, report)


def ingest_csv(path) -> ForecastDataset:
    """Read a forecast CSV into a typed, validated dataset."""
    try:
        frame = pd.read_csv(path)
    except pd.errors.ParserError as exc:
        raise DomainError(f"{path}: {exc}") from exc
    return normalize_frame(frame, source=str(path))


_R2M_A = 17.625
_R2M_B = 243.04


def derive_variables(ds: ForecastDataset) -> ForecastDataset:
    """Add wind speed, relative humidity and the annual sin/cos columns.

    ws = sqrt(u10m^2 + v10m^2) and r2m = es(d2m)/es(t2m) with the
    Magnus-form saturation pressure ratio; both are filled for the plain
    and the ``mean_``-prefixed column variants whenever their sources are
    present and the target column is absent.
    """
    frame = ds.frame.copy()
    for prefix in ("", "mean_"):
        u, v, ws = f"{prefix}u10m", f"{prefix}v10m", f"{prefix}ws10m"
        if u in frame.columns and v in frame.columns and ws not in frame.columns:
            frame[ws] = np.sqrt(frame[u].astype(float) ** 2 + frame[v].astype(float) ** 2)
        d2m, t2m, r2m = f"{prefix}d2m", f"{prefix}t2m", f"{prefix}r2m"
        if d2m in frame.columns and t2m in frame.columns and r2m not in frame.columns:
            d = frame[d2m].astype(float)
            t = frame[t2m].astype(float)
            frame[r2m] = np.exp(_R2M_A * d / (_R2M_B + d)) / np.exp(_R2M_A * t / (_R2M_B + t))
    doy = frame["doy"].to_numpy(dtype=float)
    frame["x_sin"], frame["x_cos"] = _annual_sincos(doy)
    return ForecastDataset(frame, dict(ds.report))


def rolling_window_mask(dates: pd.Series, t, window_n: int, k_years: int) -> np.ndarray:
    """Refined rolling training period around forecast day t.

    Takes days {t-n, ..., t-1} of t's own year and {t-n, ..., t+n} around
    the same calendar day in each of the k previous years.
    """
    dates = pd.to_datetime(dates)
    t = pd.Timestamp(t)
    mask = (dates >= t - pd.Timedelta(days=window_n)) & (dates <= t - pd.Timedelta(days=1))
    for back in range(1, k_years + 1):
        center = t - pd.DateOffset(years=back)
        lo = center - pd.Timedelta(days=window_n)
        hi = center + pd.Timedelta(days=window_n)
        mask |= (dates >= lo) & (dates <= hi)
    return mask.to_numpy()
