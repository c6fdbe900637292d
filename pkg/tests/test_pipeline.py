import numpy as np
import pytest
from datetime import date

from spillcast import errors
from spillcast.epimodel import ModelParams, default_init_state, simulate
from spillcast.onset import RiskLevel, collect_onset_samples, fit_onset_pdf
from spillcast.pipeline import forecast_points, predict_onset_risk, splice
from spillcast.severity import (
    build_posteriors,
    build_prior,
    collect_severity_samples,
    estimate_severity,
    fit_rate_surface,
    predict_severity,
)

from tests.conftest import constant_weather


@pytest.fixture(scope="module")
def fitted(world, pipeline_trajectories):
    cfg = world.cfg
    cases = world.cases.year_slices()
    train = {y: pipeline_trajectories[y] for y in (2019, 2020, 2021)}
    samples, _ = collect_onset_samples(train, {y: cases[y] for y in train})
    pdf = fit_onset_pdf(samples, bandwidth=(cfg.onset_bandwidth_m,
                                            cfg.onset_bandwidth_r0))
    sev_samples = collect_severity_samples(train, {y: cases[y] for y in train})
    surface = fit_rate_surface(sev_samples, grid_size=cfg.severity_grid)
    return pdf, surface


class TestForecastPoints:
    def test_long_mode_covers_target_year(self, world, fitted):
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        points = forecast_points(world.weather, "long_term", 365, params, cfg)
        assert points[0].date == date(2022, 1, 1)
        assert points[-1].date == date(2022, 12, 31)
        assert len(points) == 365

    def test_midyear_forecast_start(self, world, fitted):
        """Actual weather up to July, forecast onward: only forecast days
        are returned and they continue the calendar."""
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        start = date(2022, 7, 1)
        points = forecast_points(world.weather, "long_term", 365, params,
                                 cfg, forecast_start=start)
        assert points[0].date == start
        assert points[-1].date == date(2022, 12, 31)
        assert len(points) == (date(2022, 12, 31) - start).days + 1

    def test_short_mode_window_boundaries(self, world, fitted):
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        start = date(2022, 12, 1)
        points = forecast_points(world.weather, "short_term", 14, params,
                                 cfg, forecast_start=start)
        # 31 December days: windows of 14, 14 and 3
        assert len(points) == 31
        assert points[0].date == start
        dates = [p.date for p in points]
        assert dates == sorted(dates)

    def test_unknown_mode(self, world, fitted):
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        with pytest.raises(ValueError):
            forecast_points(world.weather, "medium_term", 14, params, cfg)

    def test_start_outside_span(self, world, fitted):
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        with pytest.raises(ValueError):
            forecast_points(world.weather, "long_term", 365, params, cfg,
                            forecast_start=date(2030, 1, 1))


class TestPredictOnsetRisk:
    def test_midyear_short_risk(self, world, fitted):
        pdf, _ = fitted
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        risk = predict_onset_risk(world.weather, "short_term", 14, pdf,
                                  params, cfg,
                                  forecast_start=date(2022, 6, 1))
        assert len(risk) == (date(2022, 12, 31) - date(2022, 6, 1)).days + 1
        assert sum(risk.counts().values()) == len(risk)

    def test_history_too_short_propagates(self, world, fitted):
        pdf, _ = fitted
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        short_history = constant_weather(400, start=date(2021, 12, 1))
        with pytest.raises(errors.HistoryTooShort):
            predict_onset_risk(short_history, "long_term", 365, pdf,
                               params, cfg)


class TestSeverityIntegration:
    def test_midyear_predict_severity(self, world, fitted):
        _, surface = fitted
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        cases = world.cases.year_slices()[2022]
        out = predict_severity(world.weather, cases, "long_term", 365,
                               surface, params, cfg,
                               forecast_start=date(2022, 8, 1))
        assert out.dates[0] == date(2022, 8, 1)
        assert len(out) == (date(2022, 12, 31) - date(2022, 8, 1)).days + 1
        assert np.all(out.predicted >= 0)
        assert np.all(out.predicted <= cfg.x_max)

    def test_onset_gate_zeroes_off_season(self, world, fitted):
        """Winter days classify Green and must report zero severity."""
        pdf, surface = fitted
        cfg = world.cfg
        params = ModelParams.from_config(cfg)
        init = default_init_state(cfg)
        wx = world.weather.year_slices()[2022]
        traj = simulate(params, wx, np.full(len(wx), world.k_star), init,
                        steps_per_day=cfg.steps_per_day)
        prior = build_prior("uniform_box", None, surface.grid)
        posteriors = build_posteriors(prior, surface, cfg.x_max)
        gated = estimate_severity(traj, posteriors, onset_pdf=pdf)
        ungated = estimate_severity(traj, posteriors)
        january = slice(0, 31)
        assert np.all(gated.predicted[january] == 0)
        assert np.all(ungated.predicted[january] >= 1)
        # gating never raises a day's prediction
        assert np.all(gated.predicted <= ungated.predicted)

    def test_nw_surface_never_below_min_count(self, fitted):
        """Supported cells are convex combinations of counts >= 1, so no
        candidate is ever annihilated on a prior that overlaps support."""
        _, surface = fitted
        supported = surface.lam[surface.lam > 0.0]
        assert np.all(supported >= 1.0 - 1e-9)
        prior = build_prior("uniform_box", None, surface.grid)
        posteriors = build_posteriors(prior, surface, 30)
        assert [p.x for p in posteriors] == list(range(1, 31))

    def test_prior_on_zero_support_raises(self, fitted):
        """A band prior entirely on zero-rate cells annihilates every
        candidate count."""
        _, surface = fitted
        zero_cells = np.argwhere(surface.lam == 0.0)
        assert len(zero_cells)
        i, j = zero_cells[0]
        curve = [(float(surface.grid.m_centers[i]),
                  float(surface.grid.w_centers[j]))]
        prior = build_prior("uniform_band", curve, surface.grid,
                            halfwidth=1e-9)
        with pytest.raises(errors.ZeroEvidence):
            build_posteriors(prior, surface, 30)

    def test_underflow_drops_far_candidates_only(self):
        """Rates at the floating-point underflow scale annihilate distant
        candidates while small ones survive and are kept."""
        from tests.test_severity import square_grid, surface_with
        grid = square_grid(16)
        surface = surface_with(grid, np.full(grid.shape, 1e-11))
        prior = build_prior("uniform_box", None, grid)
        posteriors = build_posteriors(prior, surface, 30)
        xs = [p.x for p in posteriors]
        assert 1 in xs
        assert 30 not in xs  # pmf(30, 1e-11) underflows to exactly zero


def test_splice_preserves_contiguity():
    a = constant_weather(10, start=date(2022, 1, 1))
    b = constant_weather(5, start=date(2022, 1, 11))
    joined = splice(a, b)
    assert len(joined) == 15
    assert joined.dates[0] == date(2022, 1, 1)
    assert joined.dates[-1] == date(2022, 1, 15)
    assert len(splice(a, constant_weather(0))) == 10
