import numpy as np
import pytest
from datetime import date, timedelta

from spillcast import synth
from spillcast.config import Config
from spillcast.epimodel import ModelParams, default_init_state, simulate
from spillcast.ingest import WeatherSeries


def constant_weather(n, temp=25.0, humidity=60.0, precip=1.0,
                     start=date(2021, 1, 1)):
    dates = tuple(start + timedelta(days=i) for i in range(n))
    return WeatherSeries(
        dates,
        np.full(n, float(temp)),
        np.full(n, float(humidity)),
        np.full(n, float(precip)),
    )


def sinusoid_weather(n, start=date(2021, 1, 1), base=17.0, amp=9.0):
    dates = tuple(start + timedelta(days=i) for i in range(n))
    doy = np.array([(d - date(d.year, 1, 1)).days for d in dates], dtype=float)
    temp = base + amp * np.sin(2 * np.pi * (doy - 110) / 365.25)
    hum = np.clip(65 - 10 * np.sin(2 * np.pi * (doy - 110) / 365.25), 0, 100)
    prec = np.maximum(2 + 1.8 * np.sin(2 * np.pi * (doy + 60) / 365.25), 0)
    return WeatherSeries(dates, temp, hum, prec)


@pytest.fixture(scope="session")
def default_cfg():
    return Config()


@pytest.fixture(scope="session")
def default_params(default_cfg):
    return ModelParams.from_config(default_cfg)


@pytest.fixture(scope="session")
def world():
    """The packaged synthetic fixture: 3 training years + 1 target year."""
    return synth.generate_world()


@pytest.fixture(scope="session")
def pipeline_trajectories(world):
    """Disease-free per-year trajectories as the fitting pipeline builds
    them (constant fixture K, default init)."""
    cfg = world.cfg
    params = ModelParams.from_config(cfg)
    init = default_init_state(cfg)
    out = {}
    for year, wx in world.weather.year_slices().items():
        out[year] = simulate(params, wx, np.full(len(wx), world.k_star), init,
                             steps_per_day=cfg.steps_per_day)
    return out
