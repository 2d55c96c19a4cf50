"""Dataset ingestion, derived variables, rolling windows."""

import numpy as np
import pandas as pd
import pytest

from gamdvqr.data import (derive_variables, ingest_csv, normalize_frame,
                          rolling_window_mask)
from gamdvqr.errors import DomainError


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestIngest:
    def test_well_formed_file(self, tmp_path):
        path = write_csv(tmp_path, (
            "station,date,obs,mean_t2m,sd_t2m\n"
            "S1,2020-01-01,1.5,1.2,0.3\n"
            "S1,2020-01-02,2.0,1.9,0.4\n"
            "S1,2020-01-03,2.5,2.4,0.2\n"))
        ds = ingest_csv(path)
        assert len(ds) == 3
        assert ds.stations == ["S1"]
        assert ds.report["rows"] == 3
        assert ds.report["missing_obs"] == 0

    def test_malformed_date_names_line(self, tmp_path):
        path = write_csv(tmp_path, (
            "station,date,obs\n"
            "S1,2020-01-01,1.0\n"
            "S1,not-a-date,2.0\n"))
        with pytest.raises(DomainError, match="line 3"):
            ingest_csv(path)

    def test_duplicate_station_date(self, tmp_path):
        path = write_csv(tmp_path, (
            "station,date,obs\n"
            "S1,2020-01-01,1.0\n"
            "S1,2020-01-01,2.0\n"))
        with pytest.raises(DomainError, match="duplicate"):
            ingest_csv(path)

    def test_members_summarized(self, tmp_path):
        path = write_csv(tmp_path, (
            "station,date,obs,ens_1,ens_2,ens_3\n"
            "S1,2020-01-01,2.0,1.0,2.0,3.0\n"))
        ds = ingest_csv(path)
        assert ds.frame["mean_t2m"].iloc[0] == pytest.approx(2.0)
        assert ds.frame["sd_t2m"].iloc[0] == pytest.approx(1.0)

    def test_missing_obs_flagged_not_dropped(self, tmp_path):
        path = write_csv(tmp_path, (
            "station,date,obs,mean_t2m\n"
            "S1,2020-01-01,,1.2\n"
            "S1,2020-01-02,2.0,1.9\n"))
        ds = ingest_csv(path)
        assert len(ds) == 2
        assert ds.report["missing_obs"] == 1
        assert len(ds.observed()) == 1

    def test_negative_sd_rejected(self):
        frame = pd.DataFrame({"station": ["S1"], "date": ["2020-01-01"],
                              "obs": [1.0], "sd_t2m": [-0.5]})
        with pytest.raises(DomainError, match="negative"):
            normalize_frame(frame)

    def test_single_member_rejected(self):
        frame = pd.DataFrame({"station": ["S1"], "date": ["2020-01-01"],
                              "obs": [1.0], "ens_1": [0.9]})
        with pytest.raises(DomainError, match="members"):
            normalize_frame(frame)

    def test_sincos_consistency_enforced(self):
        frame = pd.DataFrame({"station": ["S1"], "date": ["2020-06-01"],
                              "obs": [1.0], "x_sin": [0.0]})
        with pytest.raises(DomainError, match="x_sin"):
            normalize_frame(frame)


class TestDeriveVariables:
    def test_wind_speed_squared_components(self):
        frame = pd.DataFrame({"station": ["S1"], "date": ["2020-01-01"],
                              "obs": [1.0], "u10m": [3.0], "v10m": [4.0]})
        ds = derive_variables(normalize_frame(frame))
        assert ds.frame["ws10m"].iloc[0] == pytest.approx(5.0, abs=1e-12)

    def test_relative_humidity_identity_case(self):
        frame = pd.DataFrame({"station": ["S1"], "date": ["2020-01-01"],
                              "obs": [1.0], "mean_d2m": [12.5], "mean_t2m": [12.5]})
        ds = derive_variables(normalize_frame(frame))
        assert ds.frame["mean_r2m"].iloc[0] == pytest.approx(1.0, abs=1e-12)

    def test_relative_humidity_magnus_oracle(self):
        d2m, t2m = 8.0, 15.0
        frame = pd.DataFrame({"station": ["S1"], "date": ["2020-01-01"],
                              "obs": [1.0], "mean_d2m": [d2m], "mean_t2m": [t2m]})
        ds = derive_variables(normalize_frame(frame))
        oracle = np.exp(17.625 * d2m / (243.04 + d2m)) / np.exp(
            17.625 * t2m / (243.04 + t2m))
        assert ds.frame["mean_r2m"].iloc[0] == pytest.approx(oracle, abs=1e-12)

    def test_seasonal_transform_value(self):
        frame = pd.DataFrame({"station": ["S1"], "date": ["2021-04-01"],
                              "obs": [1.0]})
        ds = derive_variables(normalize_frame(frame))
        doy = ds.frame["doy"].iloc[0]
        assert doy == 91
        assert ds.frame["x_sin"].iloc[0] == pytest.approx(
            np.sin(2 * np.pi * 91 / 365.25), abs=1e-12)
        assert ds.frame["x_sin"].iloc[0] == pytest.approx(0.9999856, abs=1e-7)


class TestRollingWindow:
    def test_refined_window_composition(self):
        dates = pd.Series(pd.date_range("2015-01-01", "2019-12-31", freq="D"))
        t = pd.Timestamp("2019-06-15")
        mask = rolling_window_mask(dates, t, window_n=10, k_years=2)
        chosen = dates[mask]
        # current year: the 10 days immediately before t
        current = chosen[chosen.dt.year == 2019]
        assert len(current) == 10
        assert current.max() == t - pd.Timedelta(days=1)
        # previous years: 21-day windows centered on the same calendar day
        prev = chosen[chosen.dt.year == 2018]
        assert len(prev) == 21
        assert pd.Timestamp("2018-06-15") in set(prev)
        assert not (chosen > t).any()
        assert len(chosen[chosen.dt.year == 2016]) == 0

    def test_excludes_forecast_day_itself(self):
        dates = pd.Series(pd.date_range("2018-01-01", "2019-12-31", freq="D"))
        t = pd.Timestamp("2019-03-01")
        mask = rolling_window_mask(dates, t, window_n=5, k_years=1)
        assert t not in set(dates[mask])


class TestDatasetSlicing:
    def test_between_and_for_station(self, tmp_path):
        path = write_csv(tmp_path, (
            "station,date,obs\n"
            "A,2020-01-01,1.0\nA,2020-01-02,2.0\n"
            "B,2020-01-01,3.0\nB,2020-01-05,4.0\n"))
        ds = ingest_csv(path)
        assert ds.stations == ["A", "B"]
        sub = ds.for_station("B").between("2020-01-02", "2020-01-06")
        assert len(sub) == 1
        assert sub.frame["obs"].iloc[0] == 4.0

    def test_members_matrix(self, tmp_path):
        path = write_csv(tmp_path, (
            "station,date,obs,ens_1,ens_2\n"
            "S1,2020-01-01,2.0,1.0,3.0\n"))
        ds = ingest_csv(path)
        np.testing.assert_array_equal(ds.members_matrix(), [[1.0, 3.0]])

    def test_missing_column_error(self, tmp_path):
        path = write_csv(tmp_path, "station,date,obs\nS1,2020-01-01,1.0\n")
        with pytest.raises(DomainError):
            ingest_csv(path).column("mean_t2m")
