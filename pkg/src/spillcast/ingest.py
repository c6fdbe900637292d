"""Loading and validation of weather series and weekly case series.

Both series are immutable after construction and are kept columnar
(numpy arrays) for the forecasting and simulation code downstream.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import (
    GapTooLong,
    MissingFile,
    NegativeCount,
    NonWeeklySpacing,
    ParseError,
    RangeViolation,
)

WEATHER_HEADER = ["date", "temp_mean", "humidity", "precip"]
CASE_HEADER = ["week_start", "count"]

# Gaps of at most this many consecutive missing days are linearly
# interpolated; anything longer is an error.
MAX_GAP_DAYS = 3


@dataclass(frozen=True)
class WeatherRecord:
    """One day of weather: mean temperature (degC), relative humidity (%),
    precipitation (mm/day)."""

    date: date
    temp_mean: float
    humidity: float
    precip: float


@dataclass(frozen=True)
class WeatherSeries:
    """Daily weather over a contiguous span of calendar days.

    ``interpolated`` lists the dates that were absent in the source file
    and filled in by linear interpolation.
    """

    dates: tuple[date, ...]
    temp_mean: np.ndarray
    humidity: np.ndarray
    precip: np.ndarray
    interpolated: tuple[date, ...] = ()

    def __post_init__(self):
        n = len(self.dates)
        if not (len(self.temp_mean) == len(self.humidity) == len(self.precip) == n):
            raise ValueError("column lengths differ")
        for i in range(1, n):
            if (self.dates[i] - self.dates[i - 1]).days != 1:
                raise ValueError(f"dates not contiguous at {self.dates[i]}")
        if n and (np.any(self.humidity < 0) or np.any(self.humidity > 100)):
            raise RangeViolation("humidity", "outside [0, 100]")
        if n and np.any(self.precip < 0):
            raise RangeViolation("precip", "negative")

    def __len__(self):
        return len(self.dates)

    def record(self, i: int) -> WeatherRecord:
        return WeatherRecord(
            self.dates[i],
            float(self.temp_mean[i]),
            float(self.humidity[i]),
            float(self.precip[i]),
        )

    def records(self):
        return [self.record(i) for i in range(len(self))]

    def slice(self, start: int, stop: int) -> "WeatherSeries":
        keep = set(self.dates[start:stop])
        return WeatherSeries(
            self.dates[start:stop],
            self.temp_mean[start:stop].copy(),
            self.humidity[start:stop].copy(),
            self.precip[start:stop].copy(),
            tuple(d for d in self.interpolated if d in keep),
        )

    def year_slices(self) -> dict[int, "WeatherSeries"]:
        """Split into calendar-year subseries (keyed by year)."""
        out = {}
        years = [d.year for d in self.dates]
        for year in sorted(set(years)):
            idx = [i for i, y in enumerate(years) if y == year]
            out[year] = self.slice(idx[0], idx[-1] + 1)
        return out


@dataclass(frozen=True)
class CaseRecord:
    week_start: date
    count: int


@dataclass(frozen=True)
class CaseSeries:
    """Weekly reported human case counts; week_starts are 7 days apart.

    ``filled`` lists week_start dates that were missing in the source
    file and zero-filled.
    """

    week_starts: tuple[date, ...]
    counts: np.ndarray
    filled: tuple[date, ...] = ()

    def __post_init__(self):
        for i in range(1, len(self.week_starts)):
            if (self.week_starts[i] - self.week_starts[i - 1]).days != 7:
                raise NonWeeklySpacing(
                    f"weeks {self.week_starts[i - 1]} and {self.week_starts[i]} "
                    "are not 7 days apart"
                )
        if len(self.counts) and np.any(self.counts < 0):
            raise NegativeCount("negative case count")

    def __len__(self):
        return len(self.week_starts)

    def records(self):
        return [CaseRecord(d, int(c)) for d, c in zip(self.week_starts, self.counts)]

    def year_slices(self) -> dict[int, "CaseSeries"]:
        out = {}
        years = [d.year for d in self.week_starts]
        for year in sorted(set(years)):
            idx = [i for i, y in enumerate(years) if y == year]
            keep = set(self.week_starts[idx[0]:idx[-1] + 1])
            out[year] = CaseSeries(
                self.week_starts[idx[0]:idx[-1] + 1],
                self.counts[idx[0]:idx[-1] + 1].copy(),
                tuple(d for d in self.filled if d in keep),
            )
        return out


def _parse_float(text, field_name, lineno):
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"bad {field_name} value {text!r}", lineno) from None


def _parse_date(text, lineno):
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"bad date {text!r}", lineno) from None


def load_weather(path) -> WeatherSeries:
    """Load a daily weather CSV (``date,temp_mean,humidity,precip``).

    Rows must be strictly increasing in date.  Gaps of up to three
    consecutive missing days are filled by linear interpolation between
    the flanking records and flagged; longer gaps raise GapTooLong.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))

    rows: list[tuple[date, float, float, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if [h.strip() for h in header] != WEATHER_HEADER:
            raise ParseError(f"expected header {','.join(WEATHER_HEADER)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
            d = _parse_date(row[0], lineno)
            temp = _parse_float(row[1], "temp_mean", lineno)
            hum = _parse_float(row[2], "humidity", lineno)
            prec = _parse_float(row[3], "precip", lineno)
            if not (0.0 <= hum <= 100.0):
                raise RangeViolation("humidity", f"{hum} outside [0, 100]", lineno)
            if prec < 0.0:
                raise RangeViolation("precip", f"{prec} < 0", lineno)
            if rows and d <= rows[-1][0]:
                raise ParseError(f"dates not strictly increasing at {d}", lineno)
            rows.append((d, temp, hum, prec))

    if not rows:
        raise ParseError("no data rows", 2)

    # Fill short gaps by affine interpolation of the flanking records.
    dates: list[date] = []
    cols: list[tuple[float, float, float]] = []
    flagged: list[date] = []
    for k, (d, *vals) in enumerate(rows):
        if k > 0:
            gap = (d - rows[k - 1][0]).days - 1
            if gap > MAX_GAP_DAYS:
                raise GapTooLong(
                    f"{gap} missing days between {rows[k - 1][0]} and {d}"
                )
            prev = rows[k - 1]
            for j in range(1, gap + 1):
                frac = j / (gap + 1)
                day = prev[0] + timedelta(days=j)
                dates.append(day)
                cols.append(tuple(p + frac * (v - p) for p, v in zip(prev[1:], vals)))
                flagged.append(day)
        dates.append(d)
        cols.append(tuple(vals))

    arr = np.array(cols, dtype=float)
    return WeatherSeries(
        tuple(dates), arr[:, 0], arr[:, 1], arr[:, 2], tuple(flagged)
    )


def save_weather(series: WeatherSeries, path, sources=None) -> None:
    """Write a weather CSV in the ingest schema.

    ``sources``, if given, adds a trailing ``source`` column (one label
    per row; used by forecast export).
    """
    header = WEATHER_HEADER + (["source"] if sources is not None else [])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, d in enumerate(series.dates):
            row = [
                d.isoformat(),
                repr(float(series.temp_mean[i])),
                repr(float(series.humidity[i])),
                repr(float(series.precip[i])),
            ]
            if sources is not None:
                row.append(sources[i])
            writer.writerow(row)


def load_cases(path) -> CaseSeries:
    """Load a weekly case CSV (``week_start,count``).

    Weeks absent from the file (between the first and last week) are
    zero-filled and flagged.  Rows whose spacing is not a whole number
    of weeks raise NonWeeklySpacing.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(str(path))

    rows: list[tuple[date, int]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        if [h.strip() for h in header] != CASE_HEADER:
            raise ParseError(f"expected header {','.join(CASE_HEADER)}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", lineno)
            d = _parse_date(row[0], lineno)
            try:
                count = int(row[1])
            except ValueError:
                raise ParseError(f"bad count {row[1]!r}", lineno) from None
            if count < 0:
                raise NegativeCount(f"count {count} at {d}")
            if rows:
                spacing = (d - rows[-1][0]).days
                if spacing <= 0 or spacing % 7 != 0:
                    raise NonWeeklySpacing(
                        f"weeks {rows[-1][0]} and {d} are {spacing} days apart"
                    )
            rows.append((d, count))

    if not rows:
        raise ParseError("no data rows", 2)

    week_starts: list[date] = []
    counts: list[int] = []
    filled: list[date] = []
    for k, (d, count) in enumerate(rows):
        if k > 0:
            missing = (d - rows[k - 1][0]).days // 7 - 1
            for j in range(1, missing + 1):
                wk = rows[k - 1][0] + timedelta(days=7 * j)
                week_starts.append(wk)
                counts.append(0)
                filled.append(wk)
        week_starts.append(d)
        counts.append(count)

    return CaseSeries(
        tuple(week_starts), np.array(counts, dtype=int), tuple(filled)
    )


def save_cases(series: CaseSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CASE_HEADER)
        for d, c in zip(series.week_starts, series.counts):
            writer.writerow([d.isoformat(), int(c)])
