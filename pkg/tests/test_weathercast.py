import numpy as np
import pytest
from datetime import date

from spillcast import errors
from spillcast.weathercast import ARModel, fit_ar, forecast, forecast_weather
from spillcast.ingest import WeatherSeries

from tests.conftest import constant_weather


class TestFitAr:
    def test_constant_series_reproduced(self):
        series = np.full(50, 7.25)
        for order in (1, 3, 10):
            model = fit_ar(series, order)
            out = forecast(model, series, 5)
            assert np.allclose(out, 7.25, atol=1e-6)

    def test_exact_ar1_recovered(self):
        y = [8.0]
        for _ in range(199):
            y.append(0.5 * y[-1])
        model = fit_ar(np.array(y), 1)
        assert model.coef[0] == pytest.approx(0.5, abs=1e-9)
        assert model.intercept == pytest.approx(0.0, abs=1e-9)

    def test_too_short(self):
        with pytest.raises(errors.TooShort):
            fit_ar(np.arange(20.0), 10)  # needs 2*10+1 = 21

    def test_residuals_orthogonal_to_regressors(self):
        rng = np.random.default_rng(11)
        y = np.sin(np.arange(300) / 9.0) + 0.1 * rng.normal(size=300)
        order = 5
        model = fit_ar(y, order)
        resid = np.empty(len(y) - order)
        for t in range(order, len(y)):
            pred = model.intercept + np.dot(model.coef, y[t - 1::-1][:order])
            resid[t - order] = y[t] - pred
        for i in range(1, order + 1):
            lagged = y[order - i:len(y) - i]
            assert abs(np.dot(resid, lagged)) / len(resid) < 1e-6

    def test_seasonal_sinusoid_year_ahead(self):
        """Oracle: direct evaluation on a held-out synthetic year."""
        amp = 10.0
        t = np.arange(3650)
        rng = np.random.default_rng(5)
        y = 15.0 + amp * np.sin(2 * np.pi * t / 365.0) + 0.3 * rng.normal(size=3650)
        model = fit_ar(y[:3285], 365)
        pred = forecast(model, y[:3285], 365)
        rmse = float(np.sqrt(np.mean((pred - y[3285:]) ** 2)))
        assert rmse < 0.1 * amp


class TestForecast:
    def test_zero_horizon(self):
        model = fit_ar(np.arange(30.0), 2)
        assert len(forecast(model, np.arange(30.0), 0)) == 0

    def test_ar1_geometric_decay(self):
        model = ARModel(order=1, coef=np.array([0.5]), intercept=0.0,
                        resid_var=0.0)
        out = forecast(model, [8.0], 3)
        assert np.allclose(out, [4.0, 2.0, 1.0])

    def test_history_too_short(self):
        model = ARModel(order=3, coef=np.zeros(3), intercept=1.0, resid_var=0.0)
        with pytest.raises(errors.HistoryTooShort):
            forecast(model, [1.0, 2.0], 4)

    def test_ar2_continues_affine_ramp(self):
        """AR(2) fits y_t = 2 y_{t-1} - y_{t-2} exactly on affine data."""
        y = 3.0 + 0.25 * np.arange(60)
        model = fit_ar(y, 2)
        out = forecast(model, y, 14)
        expected = 3.0 + 0.25 * (60 + np.arange(14))
        assert np.max(np.abs(out - expected)) < 1e-6

    def test_shift_equivariance(self):
        rng = np.random.default_rng(2)
        y = np.sin(np.arange(120) / 5.0) + 0.05 * rng.normal(size=120)
        shift = 13.7
        m0 = fit_ar(y, 4)
        m1 = fit_ar(y + shift, 4)
        f0 = forecast(m0, y, 10)
        f1 = forecast(m1, y + shift, 10)
        assert np.allclose(f1, f0 + shift, atol=1e-6)


class TestForecastWeather:
    def test_two_identical_years_long_mode(self):
        """A periodic sinusoid is inside the annual-AR model class, so the
        forecast year reproduces the repeated year."""
        n = 730
        start = date(2019, 1, 1)
        t = np.arange(n)
        temp = 17.0 + 9.0 * np.sin(2 * np.pi * t / 365.0)
        hum = np.clip(60.0 + 8.0 * np.sin(2 * np.pi * (t - 40) / 365.0), 0, 100)
        prec = np.maximum(2.0 + np.sin(2 * np.pi * (t + 90) / 365.0), 0.0)
        from datetime import timedelta
        dates = tuple(start + timedelta(days=int(i)) for i in t)
        history = WeatherSeries(dates, temp, hum, prec)
        fcst = forecast_weather(history, "long_term", 365)
        assert len(fcst) == 365
        expected = 17.0 + 9.0 * np.sin(2 * np.pi * (n + np.arange(365)) / 365.0)
        assert np.max(np.abs(fcst.temp_mean - expected)) < 1e-3

    def test_short_mode_constant_weather(self):
        history = constant_weather(60, temp=20.0, humidity=55.0, precip=1.5)
        fcst = forecast_weather(history, "short_term", 14)
        assert len(fcst) == 14
        assert np.allclose(fcst.temp_mean, 20.0, atol=1e-6)
        assert np.allclose(fcst.humidity, 55.0, atol=1e-6)
        assert fcst.dates[0] == history.dates[-1] + (history.dates[1] - history.dates[0])

    def test_negative_precip_clamped(self):
        n = 80
        t = np.arange(n)
        prec = np.maximum(0.05 * (40.0 - t), 0.0)  # ramp hitting zero
        from datetime import timedelta
        dates = tuple(date(2021, 1, 1) + timedelta(days=int(i)) for i in t)
        history = WeatherSeries(dates, np.full(n, 15.0), np.full(n, 50.0), prec)
        fcst = forecast_weather(history, "short_term", 14)
        assert np.all(fcst.precip >= 0.0)

    def test_humidity_clamped_into_range(self):
        n = 80
        t = np.arange(n)
        hum = np.clip(60.0 + 0.6 * t, 0, 100)  # saturating ramp
        from datetime import timedelta
        dates = tuple(date(2021, 1, 1) + timedelta(days=int(i)) for i in t)
        history = WeatherSeries(dates, np.full(n, 15.0), hum, np.full(n, 1.0))
        fcst = forecast_weather(history, "short_term", 14)
        assert np.all(fcst.humidity <= 100.0)
        assert np.all(fcst.humidity >= 0.0)

    def test_long_mode_needs_two_years(self):
        history = constant_weather(400)
        with pytest.raises(errors.HistoryTooShort):
            forecast_weather(history, "long_term", 365)

    def test_short_mode_needs_twice_lead(self):
        history = constant_weather(20)
        with pytest.raises(errors.HistoryTooShort):
            forecast_weather(history, "short_term", 14)

    def test_zero_lead_empty(self):
        history = constant_weather(60)
        assert len(forecast_weather(history, "short_term", 0)) == 0

    def test_clamps_inactive_for_in_range_signals(self):
        # humidity comfortably inside (0, 100): the forecast must not
        # touch the clamp even with AR wiggle
        n = 200
        t = np.arange(n)
        from datetime import timedelta
        dates = tuple(date(2021, 1, 1) + timedelta(days=int(i)) for i in t)
        hum = 55.0 + 15.0 * np.sin(2 * np.pi * t / 50.0)
        prec = 3.0 + np.sin(2 * np.pi * t / 11.0)
        history = WeatherSeries(dates, np.full(n, 15.0), hum, prec)
        fcst = forecast_weather(history, "short_term", 14)
        assert np.all(fcst.humidity > 0.0) and np.all(fcst.humidity < 100.0)
        assert np.all(fcst.precip > 0.0)


def test_forecast_export_with_source_column(tmp_path):
    from spillcast.ingest import save_weather
    from spillcast.pipeline import splice
    history = constant_weather(40, temp=20.0)
    fcst = forecast_weather(history, "short_term", 10)
    combined = splice(history, fcst)
    sources = ["observed"] * len(history) + ["forecast"] * len(fcst)
    path = tmp_path / "forecast.csv"
    save_weather(combined, path, sources=sources)
    lines = path.read_text().splitlines()
    assert lines[0] == "date,temp_mean,humidity,precip,source"
    assert lines[1].endswith(",observed")
    assert lines[-1].endswith(",forecast")
    assert len(lines) == 1 + 50
