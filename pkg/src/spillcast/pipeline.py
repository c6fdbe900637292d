"""Forecast orchestration shared by the onset and severity predictors.

Both prediction flavors follow the same recipe: forecast weather from the
history (one annual-cycle AR rollout for long-term, iterated lead-day
windows with actual data appended in between for short-term), splice the
forecast onto the target year's actual weather, simulate, and hand the
forecast-window days downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date

import numpy as np

from . import weathercast
from .config import Config
from .epimodel import ModelParams, default_init_state, simulate
from .ingest import WeatherSeries
from .onset import OnsetPdf, RiskSeries, classify


@dataclass(frozen=True)
class ForecastPoint:
    """One forecast-window day of the simulated trajectory."""

    date: date
    m: float
    w: float
    r0: float


def weather_feature(weather: WeatherSeries, weights=(1.0, 0.0, 0.0)) -> np.ndarray:
    """Scalar W per day: a linear combination of temperature, humidity and
    precipitation (default: mean temperature)."""
    wt, wh, wp = weights
    return wt * weather.temp_mean + wh * weather.humidity + wp * weather.precip


def splice(actual: WeatherSeries, fcst: WeatherSeries) -> WeatherSeries:
    if len(actual) == 0:
        return fcst
    if len(fcst) == 0:
        return actual
    return WeatherSeries(
        actual.dates + fcst.dates,
        np.concatenate([actual.temp_mean, fcst.temp_mean]),
        np.concatenate([actual.humidity, fcst.humidity]),
        np.concatenate([actual.precip, fcst.precip]),
    )


def forecast_points(weather: WeatherSeries, mode: str, lead: int,
                    params: ModelParams, cfg: Config,
                    forecast_start: date | None = None,
                    k_series=None) -> list[ForecastPoint]:
    """Simulated (M, W, R0) on every forecast-window day.

    ``weather`` holds all available actual weather; everything before
    ``forecast_start`` (default: January 1 of the final year) is history.
    Each simulation starts from the default initial state on January 1 of
    the target year, driven by actual weather up to the window and
    forecast weather inside it.

    ``k_series`` supplies the carrying capacity: a fixed KSeries, a
    callable mapping the simulated WeatherSeries to one (e.g. the fitted
    precipitation-bin planes), or None for the configured constant.
    """
    if forecast_start is None:
        forecast_start = date(weather.dates[-1].year, 1, 1)
    try:
        start_idx = weather.dates.index(forecast_start)
    except ValueError:
        raise ValueError(f"{forecast_start} not in the weather span") from None
    horizon = (weather.dates[-1] - forecast_start).days + 1

    year_start = date(forecast_start.year, 1, 1)
    year_start_idx = weather.dates.index(year_start) \
        if year_start in set(weather.dates) else start_idx

    def k_for(spliced):
        if k_series is None:
            return np.full(len(spliced), cfg.k_default)
        ks = k_series(spliced) if callable(k_series) else k_series
        lookup = dict(zip(ks.dates, ks.values))
        return np.array(
            [max(lookup.get(d, cfg.k_default), 1e-6) for d in spliced.dates]
        )

    init = default_init_state(cfg)
    w_weights = (cfg.w_temp, cfg.w_humidity, cfg.w_precip)

    def run(spliced, window_dates):
        traj = simulate(params, spliced, k_for(spliced), init,
                        steps_per_day=cfg.steps_per_day)
        w_series = weather_feature(spliced, w_weights)
        return [
            ForecastPoint(traj.dates[i], float(traj.m[i]),
                          float(w_series[i]), float(traj.r0[i]))
            for i, d in enumerate(traj.dates) if d in window_dates
        ]

    points: list[ForecastPoint] = []
    if mode == "long_term":
        history = weather.slice(0, start_idx)
        fcst = weathercast.forecast_weather(
            history, "long_term", horizon,
            order_long=cfg.ar_order_long, ridge=cfg.ar_ridge)
        points = run(splice(weather.slice(year_start_idx, start_idx), fcst),
                     set(fcst.dates))
    elif mode == "short_term":
        if lead < 1:
            return []
        t = start_idx
        while t < len(weather.dates):
            history = weather.slice(0, t)
            step = min(lead, len(weather.dates) - t)
            fcst = weathercast.forecast_weather(
                history, "short_term", step,
                order_long=cfg.ar_order_long, ridge=cfg.ar_ridge)
            points.extend(
                run(splice(weather.slice(year_start_idx, t), fcst),
                    set(fcst.dates))
            )
            t += step
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return points


def predict_onset_risk(weather: WeatherSeries, mode: str, lead: int,
                       pdf: OnsetPdf, params: ModelParams, cfg: Config,
                       forecast_start: date | None = None,
                       k_series=None) -> RiskSeries:
    """Long- or short-term daily onset-risk forecast for the target year."""
    points = forecast_points(weather, mode, lead, params, cfg,
                             forecast_start=forecast_start, k_series=k_series)
    levels = tuple(classify(pdf, (p.m, p.r0)) for p in points)
    return RiskSeries(
        dates=tuple(p.date for p in points),
        m=np.array([p.m for p in points]),
        r0=np.array([p.r0 for p in points]),
        levels=levels,
    )
