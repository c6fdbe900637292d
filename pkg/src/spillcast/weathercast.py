"""Autoregressive forecasting of daily weather variables.

Long-term mode fits an AR(365) to capture the annual cycle and rolls it
out a year ahead; short-term mode fits an AR(lead) on recent data for
lead times of one to two weeks.  Forecasts are deterministic point
predictions (no innovation noise).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from .errors import HistoryTooShort, SingularDesign, TooShort
from .ingest import WeatherSeries

DEFAULT_RIDGE = 1e-8


@dataclass(frozen=True)
class ARModel:
    """y_t = intercept + sum_i coef[i] * y_{t-1-i} + noise."""

    order: int
    coef: np.ndarray
    intercept: float
    resid_var: float

    def __post_init__(self):
        if self.order < 1 or len(self.coef) != self.order:
            raise ValueError("order/coefficient mismatch")
        if not np.all(np.isfinite(self.coef)) or not np.isfinite(self.intercept):
            raise SingularDesign("non-finite AR coefficients")


def fit_ar(series, order: int, ridge: float = DEFAULT_RIDGE) -> ARModel:
    """Least-squares AR(p) fit on the lagged design matrix.

    A small ridge term on the normal equations keeps the high-order
    (p=365) fits well conditioned.  Requires len(series) >= 2p + 1.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    if order < 1:
        raise TooShort("order must be >= 1")
    if n < 2 * order + 1:
        raise TooShort(f"need at least {2 * order + 1} points for AR({order}), got {n}")

    rows = n - order
    design = np.empty((rows, order + 1))
    design[:, 0] = 1.0
    for i in range(1, order + 1):
        design[:, i] = y[order - i:n - i]
    target = y[order:]

    gram = design.T @ design
    gram[np.diag_indices_from(gram)] += ridge
    try:
        beta = np.linalg.solve(gram, design.T @ target)
    except np.linalg.LinAlgError:
        raise SingularDesign("normal equations are singular") from None
    if not np.all(np.isfinite(beta)):
        raise SingularDesign("non-finite AR solution")

    resid = target - design @ beta
    return ARModel(
        order=order,
        coef=beta[1:],
        intercept=float(beta[0]),
        resid_var=float(resid @ resid / max(rows - order - 1, 1)),
    )


def forecast(model: ARModel, history, horizon: int) -> np.ndarray:
    """Iterated one-step prediction, feeding forecasts back as inputs."""
    hist = np.asarray(history, dtype=float)
    if len(hist) < model.order:
        raise HistoryTooShort(
            f"history length {len(hist)} < AR order {model.order}"
        )
    window = list(hist[-model.order:])
    out = np.empty(horizon)
    for t in range(horizon):
        acc = model.intercept
        for i in range(model.order):
            acc += model.coef[i] * window[-1 - i]
        out[t] = acc
        window.append(acc)
        window.pop(0)
    return out


def forecast_weather(history: WeatherSeries, mode: str, lead: int,
                     order_long: int = 365,
                     ridge: float = DEFAULT_RIDGE) -> WeatherSeries:
    """Forecast temperature, humidity and precipitation independently.

    mode "long_term" fits AR(365) (clamped to the data when the history
    is exactly two years) and forecasts ``lead`` days, conventionally a
    year; mode "short_term" fits AR(lead) on the recent history.
    Humidity is clamped to [0, 100] and precipitation to >= 0.
    """
    n = len(history)
    if mode == "long_term":
        if n < 730:
            raise HistoryTooShort("long-term mode needs at least 2 years of history")
        order = min(order_long, (n - 1) // 2)
    elif mode == "short_term":
        if lead < 1:
            return WeatherSeries((), np.array([]), np.array([]), np.array([]))
        if n < 2 * lead:
            raise HistoryTooShort(
                f"short-term mode needs at least {2 * lead} days, got {n}"
            )
        order = min(lead, (n - 1) // 2)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if lead < 1:
        return WeatherSeries((), np.array([]), np.array([]), np.array([]))

    columns = []
    for values in (history.temp_mean, history.humidity, history.precip):
        model = fit_ar(values, order, ridge)
        columns.append(forecast(model, values, lead))
    temp, hum, prec = columns

    start = history.dates[-1] + timedelta(days=1)
    dates = tuple(start + timedelta(days=i) for i in range(lead))
    return WeatherSeries(
        dates,
        temp,
        np.clip(hum, 0.0, 100.0),
        np.maximum(prec, 0.0),
    )
