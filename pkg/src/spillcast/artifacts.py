"""Persistence of fitted models as diffable flat files.

A model artifact is a directory holding an INI header (metadata: version,
bandwidths, levels, thresholds, transform) plus CSV files for samples and
grids.  Classification and prediction evaluate the kernel formulas from
the stored samples, so a round-trip through the artifact reproduces the
in-memory model behavior.
"""

from __future__ import annotations

import configparser
import csv
from pathlib import Path

from .errors import MissingFile, ParseError
from .onset import OnsetPdf, OnsetSample, fit_onset_pdf
from .severity import RateSurface, SeveritySample, fit_rate_surface

ARTIFACT_VERSION = 1

ONSET_HEADER = "onset_model.ini"
ONSET_SAMPLES = "onset_samples.csv"
ONSET_GRID = "onset_grid.csv"
SEVERITY_HEADER = "severity_model.ini"
SEVERITY_SAMPLES = "severity_samples.csv"
SEVERITY_GRID = "rate_surface.csv"


def save_onset_model(pdf: OnsetPdf, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    header = configparser.ConfigParser()
    header["onset_pdf"] = {
        "version": str(ARTIFACT_VERSION),
        "bandwidth_m": repr(float(pdf.bandwidth[0])),
        "bandwidth_r0": repr(float(pdf.bandwidth[1])),
        "levels": ",".join(repr(float(v)) for v in pdf.levels),
        "thresholds": ",".join(repr(float(v)) for v in pdf.thresholds),
        "transform": pdf.transform,
        "grid_size": str(len(pdf.m_grid)),
    }
    with open(directory / ONSET_HEADER, "w") as fh:
        header.write(fh)

    with open(directory / ONSET_SAMPLES, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "r0", "weight"])
        for m, r, w in zip(pdf.sample_m, pdf.sample_r0, pdf.weights):
            writer.writerow([repr(float(m)), repr(float(r)), repr(float(w))])

    with open(directory / ONSET_GRID, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "r0", "density"])
        for i, m in enumerate(pdf.m_grid):
            for j, r in enumerate(pdf.r0_grid):
                writer.writerow([repr(float(m)), repr(float(r)),
                                 repr(float(pdf.density[i, j]))])


def load_onset_model(directory) -> OnsetPdf:
    directory = Path(directory)
    header_path = directory / ONSET_HEADER
    if not header_path.exists():
        raise MissingFile(str(header_path))
    header = configparser.ConfigParser()
    header.read(header_path)
    try:
        section = header["onset_pdf"]
        bandwidth = (float(section["bandwidth_m"]), float(section["bandwidth_r0"]))
        levels = tuple(float(v) for v in section["levels"].split(","))
        transform = section["transform"]
        grid_size = int(section["grid_size"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad onset model header: {exc}") from None

    rows = []
    with open(directory / ONSET_SAMPLES, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            rows.append((float(row[0]), float(row[1]), float(row[2])))
    if not rows:
        raise ParseError("onset model has no samples")
    # weights were stored normalized; rescale so the smallest is >= 1
    floor = min(w for _, _, w in rows)
    samples = [OnsetSample(m, r, w / floor) for m, r, w in rows]
    return fit_onset_pdf(samples, bandwidth=bandwidth, grid_size=grid_size,
                         levels=levels, transform=transform)


def save_severity_model(surface: RateSurface, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    header = configparser.ConfigParser()
    header["rate_surface"] = {
        "version": str(ARTIFACT_VERSION),
        "bandwidth_m": repr(float(surface.bandwidth[0])),
        "bandwidth_w": repr(float(surface.bandwidth[1])),
        "grid_size": str(len(surface.grid.m_centers)),
    }
    with open(directory / SEVERITY_HEADER, "w") as fh:
        header.write(fh)

    with open(directory / SEVERITY_SAMPLES, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "w", "x"])
        for m, w, x in zip(surface.sample_m, surface.sample_w, surface.sample_x):
            writer.writerow([repr(float(m)), repr(float(w)), int(x)])

    with open(directory / SEVERITY_GRID, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "w", "lambda"])
        for i, m in enumerate(surface.grid.m_centers):
            for j, w in enumerate(surface.grid.w_centers):
                writer.writerow([repr(float(m)), repr(float(w)),
                                 repr(float(surface.lam[i, j]))])


def load_severity_model(directory) -> RateSurface:
    directory = Path(directory)
    header_path = directory / SEVERITY_HEADER
    if not header_path.exists():
        raise MissingFile(str(header_path))
    header = configparser.ConfigParser()
    header.read(header_path)
    try:
        section = header["rate_surface"]
        bandwidths = (float(section["bandwidth_m"]), float(section["bandwidth_w"]))
        grid_size = int(section["grid_size"])
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad severity model header: {exc}") from None

    samples = []
    with open(directory / SEVERITY_SAMPLES, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            samples.append(SeveritySample(m=float(row[0]), w=float(row[1]),
                                          x=int(row[2])))
    return fit_rate_surface(samples, bandwidths=bandwidths,
                            grid_size=grid_size)
