"""Logarithmic scoring of weekly forecasts and the Negative-Binomial
one-step baseline.

Every model is scored on the same footing: a probability distribution over
counts 0..x_cap, scored as ln(prob of the observed count) floored at a
configured minimum.  Totals are split into the zero-week score (ZS) and
nonzero-week score (NZS), with TS = ZS + NZS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .errors import TooFewObservations, UnnormalizedDist, WeekMismatch
from .ingest import CaseSeries

DEFAULT_FLOOR = -10.0
DEFAULT_X_CAP = 100
NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class PredictiveDist:
    """Forecast distribution over counts 0..x_cap for one week."""

    week: object                 # date of the week start
    probs: np.ndarray

    def __post_init__(self):
        if np.any(self.probs < 0):
            raise UnnormalizedDist("negative probability")
        if abs(float(np.sum(self.probs)) - 1.0) > NORMALIZATION_TOL:
            raise UnnormalizedDist(f"probabilities sum to {np.sum(self.probs)}")

    @property
    def x_cap(self) -> int:
        return len(self.probs) - 1


def log_score(dist: PredictiveDist, observed: int,
              floor: float = DEFAULT_FLOOR) -> float:
    """ln of the probability assigned to the observation, floored.

    Observations beyond the distribution's support score the floor.
    """
    if abs(float(np.sum(dist.probs)) - 1.0) > NORMALIZATION_TOL:
        raise UnnormalizedDist("distribution is not normalized")
    if observed < 0 or observed > dist.x_cap:
        return floor
    p = float(dist.probs[observed])
    if p <= 0.0:
        return floor
    return max(math.log(p), floor)


def bayesian_predictive(predicted: int, sigma: float = 1.5,
                        x_cap: int = DEFAULT_X_CAP,
                        week=None) -> PredictiveDist:
    """Widen an MPP point prediction into a scorable distribution.

    A Gaussian kernel centered on the prediction is discretized over
    0..x_cap and renormalized; sigma = 0 degenerates to a point mass.
    """
    if predicted < 0:
        raise ValueError("negative prediction")
    support = np.arange(x_cap + 1)
    if sigma == 0.0:
        probs = (support == min(predicted, x_cap)).astype(float)
    else:
        z = (support - predicted) / sigma
        probs = np.exp(-0.5 * z * z)
        probs /= probs.sum()
    return PredictiveDist(week=week, probs=probs)


@dataclass(frozen=True)
class NegBinModel:
    """pmf(k) = C(k+r-1, k) p^r (1-p)^k with mean r(1-p)/p, or a Poisson
    fallback when the data are underdispersed."""

    r: float = 0.0
    p: float = 0.0
    poisson_mean: float | None = None

    def __post_init__(self):
        if self.poisson_mean is None:
            if self.r <= 0 or not 0.0 < self.p < 1.0:
                raise ValueError(f"bad NB parameters r={self.r}, p={self.p}")
        elif self.poisson_mean < 0:
            raise ValueError("negative Poisson mean")

    def log_pmf(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.poisson_mean is not None:
            mu = self.poisson_mean
            if mu == 0.0:
                return np.where(k == 0, 0.0, -np.inf)
            return k * math.log(mu) - mu - gammaln(k + 1)
        return (
            gammaln(k + self.r) - gammaln(self.r) - gammaln(k + 1)
            + self.r * math.log(self.p) + k * math.log1p(-self.p)
        )

    def pmf(self, k) -> np.ndarray:
        return np.exp(self.log_pmf(k))

    def mean(self) -> float:
        if self.poisson_mean is not None:
            return self.poisson_mean
        return self.r * (1.0 - self.p) / self.p


def negbin_loglik(counts, r: float, p: float) -> float:
    counts = np.asarray(counts, dtype=float)
    return float(np.sum(
        gammaln(counts + r) - gammaln(r) - gammaln(counts + 1)
        + r * math.log(p) + counts * math.log1p(-p)
    ))


def fit_negbin(history, min_obs: int = 8) -> NegBinModel:
    """Maximum-likelihood Negative Binomial fit.

    The dispersion r is found by a 1-D profile search (p is closed-form
    given r: p = r / (r + mean)).  Underdispersed samples (variance <=
    mean) fall back to a Poisson with the MLE mean.
    """
    counts = np.asarray(history, dtype=float)
    if len(counts) < min_obs:
        raise TooFewObservations(
            f"need at least {min_obs} observations, got {len(counts)}"
        )
    if np.any(counts < 0):
        raise ValueError("negative counts")
    mean = float(np.mean(counts))
    var = float(np.var(counts, ddof=1))
    if var <= mean or mean == 0.0:
        return NegBinModel(poisson_mean=mean)

    def neg_profile(log_r):
        r = math.exp(log_r)
        p = r / (r + mean)
        return -negbin_loglik(counts, r, p)

    res = minimize_scalar(neg_profile, bounds=(math.log(1e-3), math.log(1e6)),
                          method="bounded",
                          options={"xatol": 1e-10})
    r = math.exp(res.x)
    return NegBinModel(r=r, p=r / (r + mean))


def nb_one_step(window, x_cap: int = DEFAULT_X_CAP, min_obs: int = 8,
                week=None) -> PredictiveDist:
    """Refit on the window and return next week's truncated pmf."""
    model = fit_negbin(window, min_obs=min_obs)
    probs = model.pmf(np.arange(x_cap + 1))
    total = probs.sum()
    if total <= 0:
        raise UnnormalizedDist("truncated pmf has zero mass")
    return PredictiveDist(week=week, probs=probs / total)


@dataclass(frozen=True)
class ScoreReport:
    weeks: tuple
    observed: tuple
    scores: tuple
    floor: float = DEFAULT_FLOOR

    @property
    def ts(self) -> float:
        return float(sum(self.scores))

    @property
    def zs(self) -> float:
        return float(sum(s for s, o in zip(self.scores, self.observed) if o == 0))

    @property
    def nzs(self) -> float:
        return float(sum(s for s, o in zip(self.scores, self.observed) if o > 0))


def score_run(predictions, observations: CaseSeries,
              floor: float = DEFAULT_FLOOR) -> ScoreReport:
    """Score aligned weekly predictions; weeks must match one-to-one."""
    if len(predictions) != len(observations):
        raise WeekMismatch(
            f"{len(predictions)} predictions vs {len(observations)} observations"
        )
    scores = []
    for dist, wk, obs in zip(predictions, observations.week_starts,
                             observations.counts):
        if dist.week is not None and dist.week != wk:
            raise WeekMismatch(f"prediction week {dist.week} != observed week {wk}")
        scores.append(log_score(dist, int(obs), floor))
    return ScoreReport(
        weeks=tuple(observations.week_starts),
        observed=tuple(int(c) for c in observations.counts),
        scores=tuple(scores),
        floor=floor,
    )
