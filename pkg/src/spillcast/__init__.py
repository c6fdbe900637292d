"""spillcast: West Nile virus spillover onset-risk and severity forecasting.

A temperature-driven compartmental mosquito-bird-human model feeds a
closed-form reproduction number, a kernel-density onset-risk surface over
(M, R0), and Bayesian Poisson severity inference, with logarithmic-score
evaluation and multi-decade trend tooling on top.
"""

__version__ = "0.1.0"

from .config import Config, load_config, parse_config
from .epimodel import (
    CompartmentState,
    ModelParams,
    Trajectory,
    default_init_state,
    derivatives,
    simulate,
)
from .ingest import (
    CaseRecord,
    CaseSeries,
    WeatherRecord,
    WeatherSeries,
    load_cases,
    load_weather,
)
from .onset import OnsetPdf, OnsetSample, RiskLevel, classify, fit_onset_pdf
from .r0 import R0Inputs, exposed_survival, r0, r0_bird, r0_mosquito
from .thermal import ThermalCurve, eval_thermal

__all__ = [
    "CaseRecord",
    "CaseSeries",
    "CompartmentState",
    "Config",
    "ModelParams",
    "OnsetPdf",
    "OnsetSample",
    "R0Inputs",
    "RiskLevel",
    "ThermalCurve",
    "Trajectory",
    "WeatherRecord",
    "WeatherSeries",
    "classify",
    "default_init_state",
    "derivatives",
    "eval_thermal",
    "exposed_survival",
    "fit_onset_pdf",
    "load_cases",
    "load_config",
    "load_weather",
    "parse_config",
    "r0",
    "r0_bird",
    "r0_mosquito",
    "simulate",
]
