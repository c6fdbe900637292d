"""Spillover-onset risk: case-weighted bivariate density over (M, R0).

Each historical year contributes one sample: the mosquito profile and
reproduction number on the midpoint day of the year's first nonzero case
week, weighted by that week's count.  A weighted Gaussian-product KDE is
fitted to the samples; highest-density-region thresholds at the configured
mass levels split the plane into four risk classes, High down to Green.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from datetime import timedelta

import numpy as np

from .epimodel import Trajectory
from .errors import TooFewSamples, ZeroBandwidth
from .ingest import CaseSeries

DEFAULT_LEVELS = (0.88, 0.90, 0.95)
GRID_PAD_BANDWIDTHS = 3.0


class RiskLevel(enum.IntEnum):
    """Total order: High > Risky > Low > Green."""

    GREEN = 0
    LOW = 1
    RISKY = 2
    HIGH = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "RiskLevel":
        return cls[label.upper()]


@dataclass(frozen=True)
class OnsetSample:
    m: float
    r0: float
    weight: float

    def __post_init__(self):
        if self.m < 0 or self.r0 < 0:
            raise ValueError("negative coordinate")
        if self.weight < 1:
            raise ValueError("weight must be >= 1")


def apply_transform(transform: str, m, r0):
    """Feature transform applied to (M, R0) before density fitting."""
    if transform == "identity":
        return m, r0
    if transform == "log1p_m":
        return np.log1p(m), r0
    raise ValueError(f"unknown feature transform {transform!r}")


def collect_onset_samples(trajectories: dict, cases: dict,
                          scope: str = "first_spillover_only",
                          transform: str = "identity"):
    """One sample per year at the first nonzero case week.

    ``trajectories`` and ``cases`` map year -> Trajectory / CaseSeries.
    The sample sits on the week's midpoint day (start + 3); years without
    cases yield no sample and are returned as flagged.
    """
    if scope != "first_spillover_only":
        raise ValueError(f"unknown scope {scope!r}")
    samples, skipped = [], []
    for year in sorted(cases):
        series = cases[year]
        traj = trajectories.get(year)
        if traj is None:
            raise KeyError(f"no trajectory for year {year}")
        nonzero = [i for i, c in enumerate(series.counts) if c > 0]
        if not nonzero:
            skipped.append(year)
            continue
        first = nonzero[0]
        midpoint = series.week_starts[first] + timedelta(days=3)
        try:
            day = traj.dates.index(midpoint)
        except ValueError:
            skipped.append(year)
            continue
        m, r0 = apply_transform(transform, float(traj.m[day]), float(traj.r0[day]))
        samples.append(OnsetSample(m=m, r0=r0, weight=float(series.counts[first])))
    return samples, skipped


def _weighted_silverman(values, weights):
    """Per-axis Silverman bandwidth with Kish effective sample size.

    For two dimensions the Silverman prefactor is exactly 1, leaving
    sigma * n_eff^(-1/6).
    """
    mean = np.sum(weights * values)
    var = np.sum(weights * (values - mean) ** 2)
    n_eff = 1.0 / np.sum(weights**2)
    return math.sqrt(var) * n_eff ** (-1.0 / 6.0)


@dataclass(frozen=True)
class OnsetPdf:
    """Fitted onset density with its evaluation grid and HDR thresholds."""

    sample_m: np.ndarray
    sample_r0: np.ndarray
    weights: np.ndarray          # normalized to sum 1
    bandwidth: tuple             # (h_m, h_r0)
    m_grid: np.ndarray           # cell centers
    r0_grid: np.ndarray
    density: np.ndarray          # (len(m_grid), len(r0_grid))
    levels: tuple
    thresholds: tuple            # density cutoffs, decreasing with level
    transform: str = "identity"

    @property
    def cell_area(self) -> float:
        return float(
            (self.m_grid[1] - self.m_grid[0]) * (self.r0_grid[1] - self.r0_grid[0])
        )

    def grid_mass(self) -> float:
        return float(np.sum(self.density) * self.cell_area)

    def evaluate(self, m: float, r0: float) -> float:
        """KDE density at an already-transformed point."""
        h_m, h_r = self.bandwidth
        zm = (m - self.sample_m) / h_m
        zr = (r0 - self.sample_r0) / h_r
        kern = np.exp(-0.5 * (zm * zm + zr * zr))
        return float(np.sum(self.weights * kern) / (2.0 * math.pi * h_m * h_r))


def fit_onset_pdf(samples, bandwidth=None, grid_size: int = 128,
                  levels=DEFAULT_LEVELS, transform: str = "identity") -> OnsetPdf:
    """Weighted Gaussian-product KDE over the samples.

    ``bandwidth`` is (h_m, h_r0); when omitted the weighted Silverman rule
    sets each axis (which needs at least two distinct samples).  The grid
    extends three bandwidths beyond the sample range.
    """
    samples = list(samples)
    if not samples:
        raise TooFewSamples("need at least one onset sample")
    w = np.array([s.weight for s in samples], dtype=float)
    total = w.sum()
    if total <= 0:
        raise TooFewSamples("total sample weight must be positive")
    w = w / total
    sm = np.array([s.m for s in samples], dtype=float)
    sr = np.array([s.r0 for s in samples], dtype=float)

    if bandwidth is None:
        h_m = _weighted_silverman(sm, w)
        h_r = _weighted_silverman(sr, w)
    else:
        h_m, h_r = float(bandwidth[0]), float(bandwidth[1])
    if h_m <= 0 or h_r <= 0:
        raise ZeroBandwidth(
            f"bandwidth ({h_m:g}, {h_r:g}); supply explicit positive bandwidths"
        )

    lo_m = sm.min() - GRID_PAD_BANDWIDTHS * h_m
    hi_m = sm.max() + GRID_PAD_BANDWIDTHS * h_m
    lo_r = sr.min() - GRID_PAD_BANDWIDTHS * h_r
    hi_r = sr.max() + GRID_PAD_BANDWIDTHS * h_r
    m_grid = _cell_centers(lo_m, hi_m, grid_size)
    r0_grid = _cell_centers(lo_r, hi_r, grid_size)

    zm = (m_grid[:, None] - sm[None, :]) / h_m
    zr = (r0_grid[:, None] - sr[None, :]) / h_r
    km = np.exp(-0.5 * zm * zm)                      # (grid, samples)
    kr = np.exp(-0.5 * zr * zr)
    density = (km * w) @ kr.T / (2.0 * math.pi * h_m * h_r)

    pdf = OnsetPdf(
        sample_m=sm, sample_r0=sr, weights=w,
        bandwidth=(h_m, h_r),
        m_grid=m_grid, r0_grid=r0_grid, density=density,
        levels=tuple(levels), thresholds=(), transform=transform,
    )
    thresholds = hdr_thresholds(pdf, levels)
    object.__setattr__(pdf, "thresholds", tuple(thresholds))
    return pdf


def _cell_centers(lo, hi, n):
    step = (hi - lo) / n
    return lo + step * (np.arange(n) + 0.5)


def hdr_thresholds(pdf: OnsetPdf, levels) -> list:
    """Highest-density-region cutoffs on the grid.

    For each mass level the threshold is the largest density d whose
    super-level set {density >= d} accumulates at least that much mass
    (cells counted from the densest down).  Levels at or above the total
    grid mass fall back to the minimum grid density.
    """
    flat = np.sort(pdf.density, axis=None)[::-1]
    cum = np.cumsum(flat) * pdf.cell_area
    out = []
    for level in levels:
        if level >= cum[-1]:
            out.append(float(flat[-1]))
            continue
        idx = int(np.searchsorted(cum, level, side="left"))
        out.append(float(flat[idx]))
    return out


def classify(pdf: OnsetPdf, point) -> RiskLevel:
    """Risk class of a raw (m, r0) point; thresholds are inclusive upward."""
    m, r0 = apply_transform(pdf.transform, float(point[0]), float(point[1]))
    d = pdf.evaluate(m, r0)
    t_high, t_risky, t_low = pdf.thresholds
    if d >= t_high:
        return RiskLevel.HIGH
    if d >= t_risky:
        return RiskLevel.RISKY
    if d >= t_low:
        return RiskLevel.LOW
    return RiskLevel.GREEN


@dataclass(frozen=True)
class RiskSeries:
    """Per-day classification of a trajectory with summary counts."""

    dates: tuple
    m: np.ndarray
    r0: np.ndarray
    levels: tuple

    def __len__(self):
        return len(self.dates)

    def counts(self) -> dict:
        out = {lvl: 0 for lvl in RiskLevel}
        for lvl in self.levels:
            out[lvl] += 1
        return out


def forecast_onset(pdf: OnsetPdf, traj: Trajectory) -> RiskSeries:
    """Classify every trajectory day against the fitted onset density."""
    levels = tuple(
        classify(pdf, (traj.m[i], traj.r0[i])) for i in range(len(traj))
    )
    return RiskSeries(dates=traj.dates, m=traj.m.copy(), r0=traj.r0.copy(),
                      levels=levels)


def save_risk_series(series: RiskSeries, path) -> None:
    """Risk CSV ``date,M,R0,risk_level`` plus one summary footer row per
    level (``# count_<level>``)."""
    counts = series.counts()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "M", "R0", "risk_level"])
        for i, d in enumerate(series.dates):
            writer.writerow(
                [d.isoformat(), repr(float(series.m[i])),
                 repr(float(series.r0[i])), series.levels[i].label]
            )
        for lvl in (RiskLevel.HIGH, RiskLevel.RISKY, RiskLevel.LOW, RiskLevel.GREEN):
            fh.write(f"# count_{lvl.label} = {counts[lvl]}\n")


def save_pdf_grid(pdf: OnsetPdf, path) -> None:
    """Density grid CSV ``m,r0,density`` for external plotting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "r0", "density"])
        for i, m in enumerate(pdf.m_grid):
            for j, r in enumerate(pdf.r0_grid):
                writer.writerow([repr(float(m)), repr(float(r)),
                                 repr(float(pdf.density[i, j]))])
