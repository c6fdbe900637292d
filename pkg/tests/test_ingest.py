import numpy as np
import pytest
from datetime import date

from spillcast import errors
from spillcast.ingest import (
    CaseSeries,
    WeatherSeries,
    load_cases,
    load_weather,
    save_cases,
    save_weather,
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoadWeather:
    def test_single_row(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "date,temp_mean,humidity,precip\n2020-01-01,12.5,60,0.0\n")
        series = load_weather(p)
        assert len(series) == 1
        assert series.temp_mean[0] == 12.5
        assert series.dates[0] == date(2020, 1, 1)

    def test_gap_interpolated_and_flagged(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "date,temp_mean,humidity,precip\n"
                  "2020-01-01,10.0,50,0.0\n"
                  "2020-01-03,20.0,70,2.0\n")
        series = load_weather(p)
        assert len(series) == 3
        assert series.dates[1] == date(2020, 1, 2)
        # affine interpolation of the flanking records
        assert series.temp_mean[1] == pytest.approx(15.0)
        assert series.humidity[1] == pytest.approx(60.0)
        assert series.precip[1] == pytest.approx(1.0)
        assert series.interpolated == (date(2020, 1, 2),)

    def test_three_day_gap_ok_four_day_gap_errors(self, tmp_path):
        ok = write(tmp_path, "ok.csv",
                   "date,temp_mean,humidity,precip\n"
                   "2020-01-01,10,50,0\n2020-01-05,18,50,0\n")
        series = load_weather(ok)
        assert len(series) == 5
        assert series.temp_mean[2] == pytest.approx(14.0)

        bad = write(tmp_path, "bad.csv",
                    "date,temp_mean,humidity,precip\n"
                    "2020-01-01,10,50,0\n2020-01-06,18,50,0\n")
        with pytest.raises(errors.GapTooLong):
            load_weather(bad)

    def test_humidity_range_violation(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "date,temp_mean,humidity,precip\n2020-01-01,12.5,150,0.0\n")
        with pytest.raises(errors.RangeViolation):
            load_weather(p)

    def test_negative_precip_rejected(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "date,temp_mean,humidity,precip\n2020-01-01,12.5,60,-1.0\n")
        with pytest.raises(errors.RangeViolation):
            load_weather(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(errors.MissingFile):
            load_weather(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path):
        p = write(tmp_path, "w.csv", "a,b,c,d\n2020-01-01,1,2,3\n")
        with pytest.raises(errors.ParseError):
            load_weather(p)

    def test_parse_error_reports_line(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "date,temp_mean,humidity,precip\n"
                  "2020-01-01,10,50,0\n2020-01-02,oops,50,0\n")
        with pytest.raises(errors.ParseError) as exc:
            load_weather(p)
        assert exc.value.line == 3

    def test_non_increasing_dates(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "date,temp_mean,humidity,precip\n"
                  "2020-01-02,10,50,0\n2020-01-01,11,50,0\n")
        with pytest.raises(errors.ParseError):
            load_weather(p)

    def test_round_trip_bit_exact(self, tmp_path):
        p = write(tmp_path, "w.csv",
                  "date,temp_mean,humidity,precip\n"
                  "2020-01-01,12.537,61.25,0.125\n"
                  "2020-01-02,13.1,60.0,0.0\n"
                  "2020-01-04,9.999,58.875,3.5\n")
        first = load_weather(p)
        out = tmp_path / "rt.csv"
        save_weather(first, out)
        second = load_weather(out)
        assert first.dates == second.dates
        assert np.array_equal(first.temp_mean, second.temp_mean)
        assert np.array_equal(first.humidity, second.humidity)
        assert np.array_equal(first.precip, second.precip)


class TestLoadCases:
    def test_single_row(self, tmp_path):
        p = write(tmp_path, "c.csv", "week_start,count\n2020-06-01,3\n")
        series = load_cases(p)
        assert len(series) == 1
        assert series.counts[0] == 3

    def test_non_weekly_spacing(self, tmp_path):
        p = write(tmp_path, "c.csv",
                  "week_start,count\n2020-06-01,3\n2020-06-06,1\n")
        with pytest.raises(errors.NonWeeklySpacing):
            load_cases(p)

    def test_missing_week_zero_filled_and_flagged(self, tmp_path):
        p = write(tmp_path, "c.csv",
                  "week_start,count\n2020-06-01,3\n2020-06-15,2\n")
        series = load_cases(p)
        assert len(series) == 3
        assert list(series.counts) == [3, 0, 2]
        assert series.filled == (date(2020, 6, 8),)

    def test_negative_count(self, tmp_path):
        p = write(tmp_path, "c.csv", "week_start,count\n2020-06-01,-2\n")
        with pytest.raises(errors.NegativeCount):
            load_cases(p)

    def test_round_trip(self, tmp_path):
        p = write(tmp_path, "c.csv",
                  "week_start,count\n2020-06-01,3\n2020-06-08,0\n2020-06-15,7\n")
        first = load_cases(p)
        out = tmp_path / "rt.csv"
        save_cases(first, out)
        second = load_cases(out)
        assert first.week_starts == second.week_starts
        assert np.array_equal(first.counts, second.counts)


class TestSeriesInvariants:
    def test_weather_dates_must_be_contiguous(self):
        with pytest.raises(ValueError):
            WeatherSeries(
                (date(2020, 1, 1), date(2020, 1, 3)),
                np.array([1.0, 2.0]), np.array([50.0, 50.0]),
                np.array([0.0, 0.0]),
            )

    def test_case_weeks_must_be_seven_days_apart(self):
        with pytest.raises(errors.NonWeeklySpacing):
            CaseSeries((date(2020, 6, 1), date(2020, 6, 5)),
                       np.array([1, 2]))

    def test_year_slices_cover_series(self):
        n = 40
        from tests.conftest import constant_weather
        wx = constant_weather(n, start=date(2020, 12, 10))
        parts = wx.year_slices()
        assert set(parts) == {2020, 2021}
        assert sum(len(p) for p in parts.values()) == n
