"""Exact score functions for analytic data distributions.

Every model here knows the closed form of its diffused marginal
``q_t = Law(sqrt(abar_t) x_0 + sqrt(1-abar_t) eps)`` and therefore returns
the exact score ``grad log q_t`` and the equivalent noise prediction
``eps = -sqrt(1-abar_t) * score``.  Three families are provided:

* :class:`GaussianMixture1D` -- symmetric two-component mixture whose
  diffused marginal is again a symmetric mixture with mean ``sqrt(abar_t) mu``
  and variance ``abar_t sigma^2 + 1 - abar_t``.
* :class:`GaussianData` -- a single Gaussian; the score is linear.
* :class:`EmpiricalDataset` -- a finite point set; the diffused marginal is
  an equal-weight mixture of Gaussians centred at ``sqrt(abar_t) x_i`` with
  variance ``(1-abar_t) I``.  Optional per-point labels give exact
  class-conditional scores by restricting the mixture to the labelled subset.

All mixture computations run in log space; models are immutable and their
evaluations are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backends
from .errors import CapabilityError, DomainError, EmptyClassError
from .schedule import DEFAULT_MIN_TIME, NoiseSchedule

_LOG_2PI = math.log(2.0 * math.pi)


def score_to_eps(score, schedule: NoiseSchedule, t):
    """Convert a score value to a noise prediction: ``-sqrt(1-abar_t)*score``."""
    ab = schedule.alpha_bar(t)
    return -np.sqrt(1.0 - ab) * np.asarray(score, dtype=np.float64)


def eps_to_score(eps, schedule: NoiseSchedule, t):
    """Exact inverse of :func:`score_to_eps` for t > 0."""
    ab = schedule.alpha_bar(t)
    if ab >= 1.0:
        raise DomainError("eps carries no score information at t = 0")
    return -np.asarray(eps, dtype=np.float64) / math.sqrt(1.0 - ab)


class ScoreModel:
    """Base class: exact score and noise prediction, optionally conditional."""

    schedule: NoiseSchedule
    dimension: int
    #: Smallest time at which the diffused density exists.
    min_time: float = 0.0
    #: Frozenset of known condition labels, or None when unconditional.
    labels = None

    @property
    def supports_conditioning(self) -> bool:
        return self.labels is not None

    def _check_condition(self, condition):
        if condition is None:
            return
        if not self.supports_conditioning:
            raise CapabilityError(
                f"{type(self).__name__} does not support conditioning")
        if condition not in self.labels:
            raise EmptyClassError(f"label {condition!r} matches no data points")

    def score(self, x, t, condition=None):
        raise NotImplementedError

    def log_density(self, x, t, condition=None):
        raise CapabilityError(
            f"{type(self).__name__} does not expose a log density")

    def eps(self, x, t, condition=None):
        """Noise prediction ``-sqrt(1-abar_t) * score(x, t)``."""
        return score_to_eps(self.score(x, t, condition), self.schedule, t)


# ---------------------------------------------------------------------------


class GaussianMixture1D(ScoreModel):
    """Symmetric two-component Gaussian mixture on the line.

    ``q_0(x) = N(x | -mu, sigma^2)/2 + N(x | mu, sigma^2)/2``; the diffused
    marginal keeps the same form with mean ``mu_t = sqrt(abar_t) mu`` and
    variance ``var_t = abar_t sigma^2 + 1 - abar_t``.
    """

    dimension = 1

    def __init__(self, mu: float, sigma: float, schedule: NoiseSchedule) -> None:
        if sigma <= 0:
            raise DomainError("sigma must be positive")
        self.mu = float(mu)
        self.sigma = float(sigma)
        self.schedule = schedule

    def diffused_params(self, t):
        """Mean magnitude and variance of the marginal at time t."""
        ab = self.schedule.alpha_bar(t)
        return math.sqrt(ab) * self.mu, ab * self.sigma ** 2 + 1.0 - ab

    def score(self, x, t, condition=None):
        """``(mu_t/var_t) tanh(mu_t x / var_t) - x / var_t``."""
        self._check_condition(condition)
        mu_t, var_t = self.diffused_params(t)
        x = np.asarray(x, dtype=np.float64)
        return (mu_t / var_t) * np.tanh(mu_t * x / var_t) - x / var_t

    def score_derivative(self, x, t, condition=None):
        """``d score / dx = (mu_t/var_t)^2 sech^2(mu_t x/var_t) - 1/var_t``."""
        self._check_condition(condition)
        mu_t, var_t = self.diffused_params(t)
        x = np.asarray(x, dtype=np.float64)
        th = np.tanh(mu_t * x / var_t)
        return (mu_t / var_t) ** 2 * (1.0 - th * th) - 1.0 / var_t

    def log_density(self, x, t, condition=None):
        self._check_condition(condition)
        mu_t, var_t = self.diffused_params(t)
        x = np.asarray(x, dtype=np.float64)
        la = -((x - mu_t) ** 2) / (2.0 * var_t)
        lb = -((x + mu_t) ** 2) / (2.0 * var_t)
        return np.logaddexp(la, lb) - math.log(2.0) - 0.5 * math.log(2.0 * math.pi * var_t)

    def eps(self, x, t, condition=None):
        self._check_condition(condition)
        mu_t, var_t = self.diffused_params(t)
        ab = self.schedule.alpha_bar(t)
        return backends.gm1d_eps(x, mu_t, var_t, math.sqrt(1.0 - ab))

    def sample(self, rng: np.random.Generator, n: int, t: float = 0.0):
        """Exact draws from the diffused marginal at time t."""
        mu_t, var_t = self.diffused_params(t)
        signs = np.where(rng.integers(0, 2, size=n) == 0, -1.0, 1.0)
        return signs * mu_t + math.sqrt(var_t) * rng.standard_normal(n)


class GaussianData(ScoreModel):
    """Single-Gaussian data: the diffused marginal stays Gaussian.

    Marginal at time t is ``N(sqrt(abar_t) mean, abar_t variance + 1-abar_t)``
    per coordinate; the score is linear in x.
    """

    def __init__(self, mean, variance: float, schedule: NoiseSchedule) -> None:
        if variance <= 0:
            raise DomainError("variance must be positive")
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        self.mean = mean
        self.variance = float(variance)
        self.schedule = schedule
        self.dimension = mean.size

    def diffused_params(self, t):
        ab = self.schedule.alpha_bar(t)
        return math.sqrt(ab) * self.mean, ab * self.variance + 1.0 - ab

    def score(self, x, t, condition=None):
        self._check_condition(condition)
        m_t, v_t = self.diffused_params(t)
        x = np.asarray(x, dtype=np.float64)
        if self.dimension == 1:
            m_t = float(m_t[0])
        return (m_t - x) / v_t

    def log_density(self, x, t, condition=None):
        self._check_condition(condition)
        m_t, v_t = self.diffused_params(t)
        x = np.asarray(x, dtype=np.float64)
        if self.dimension == 1:
            sq = (x - float(m_t[0])) ** 2
            return -sq / (2.0 * v_t) - 0.5 * math.log(2.0 * math.pi * v_t)
        sq = ((x - m_t) ** 2).sum(axis=-1)
        return -sq / (2.0 * v_t) - 0.5 * self.dimension * math.log(2.0 * math.pi * v_t)

    def sample(self, rng: np.random.Generator, n: int, t: float = 0.0):
        m_t, v_t = self.diffused_params(t)
        if self.dimension == 1:
            return float(m_t[0]) + math.sqrt(v_t) * rng.standard_normal(n)
        return m_t + math.sqrt(v_t) * rng.standard_normal((n, self.dimension))


class EmpiricalDataset(ScoreModel):
    """Finite point set with exact diffused-mixture scores.

    Parameters
    ----------
    points : (K, D) array
        Data points, one per row.
    schedule : NoiseSchedule
    labels : sequence of str, optional
        Per-point labels enabling exact class-conditional evaluation.
    """

    min_time = DEFAULT_MIN_TIME

    def __init__(self, points, schedule: NoiseSchedule, labels=None) -> None:
        points = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        if points.size == 0:
            raise DomainError("dataset must be nonempty")
        self.points = points
        self.schedule = schedule
        self.dimension = points.shape[1]
        if labels is not None:
            labels = tuple(labels)
            if len(labels) != points.shape[0]:
                raise DomainError("one label per point required")
            self.point_labels = labels
            self.labels = frozenset(labels)
            self._subsets = {
                lab: np.ascontiguousarray(
                    points[[i for i, l in enumerate(labels) if l == lab]])
                for lab in self.labels
            }
        else:
            self.point_labels = None

    def __len__(self) -> int:
        return self.points.shape[0]

    def _points_for(self, condition):
        self._check_condition(condition)
        if condition is None:
            return self.points
        return self._subsets[condition]

    def _diffusion(self, t):
        ab = self.schedule.alpha_bar(t)
        if ab >= 1.0 or t < self.min_time:
            raise DomainError(
                "empirical scores are undefined at t = 0; use a clamped grid")
        return ab, 1.0 - ab

    def score(self, x, t, condition=None):
        pts = self._points_for(condition)
        ab, var = self._diffusion(t)
        eps = backends.empirical_eps(
            np.atleast_2d(np.asarray(x, dtype=np.float64)),
            math.sqrt(ab) * pts, var, math.sqrt(var))
        score = -eps / math.sqrt(var)
        return score[0] if np.asarray(x).ndim == 1 else score

    def eps(self, x, t, condition=None):
        pts = self._points_for(condition)
        ab, var = self._diffusion(t)
        out = backends.empirical_eps(
            np.atleast_2d(np.asarray(x, dtype=np.float64)),
            math.sqrt(ab) * pts, var, math.sqrt(var))
        return out[0] if np.asarray(x).ndim == 1 else out

    def log_density(self, x, t, condition=None):
        pts = self._points_for(condition)
        ab, var = self._diffusion(t)
        x2 = np.atleast_2d(np.asarray(x, dtype=np.float64))
        centers = math.sqrt(ab) * pts
        d2 = ((x2[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        lse = _logsumexp(-d2 / (2.0 * var), axis=1)
        out = (lse - math.log(pts.shape[0])
               - 0.5 * self.dimension * (math.log(var) + _LOG_2PI))
        return out[0] if np.asarray(x).ndim == 1 else out

    def sample(self, rng: np.random.Generator, n: int, t: float,
               condition=None):
        """Draws from the diffused mixture at time t (t >= min_time)."""
        pts = self._points_for(condition)
        ab, var = self._diffusion(t)
        idx = rng.integers(0, pts.shape[0], size=n)
        return (math.sqrt(ab) * pts[idx]
                + math.sqrt(var) * rng.standard_normal((n, self.dimension)))


def _logsumexp(a, axis):
    m = a.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(a - m).sum(axis=axis, keepdims=True))).squeeze(axis)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GuidanceSchedule:
    """Linear ramp of the guidance scale between t = 0 and t = t0."""

    scale_at_zero: float
    scale_at_t0: float
    t0: float

    def __post_init__(self) -> None:
        if self.scale_at_zero < 0 or self.scale_at_t0 < 0:
            raise DomainError("guidance scales must be nonnegative")
        if self.t0 <= 0:
            raise DomainError("t0 must be positive")

    def scale_at(self, t: float) -> float:
        if t < 0.0 or t > self.t0 * (1.0 + 1e-12):
            raise DomainError(f"guidance is only defined on [0, {self.t0}]")
        frac = min(t / self.t0, 1.0)
        return self.scale_at_zero + (self.scale_at_t0 - self.scale_at_zero) * frac


def guidance_scale_at(gs: GuidanceSchedule, t: float) -> float:
    """Guidance scale at time t; linear between the two endpoint scales."""
    return gs.scale_at(t)


@dataclass(frozen=True)
class Guidance:
    """A condition label plus an optional guidance-scale ramp.

    With ``schedule=None`` evaluation is purely conditional (scale 1).
    """

    label: object
    schedule: GuidanceSchedule | None = None

    def eps(self, model: ScoreModel, x, t):
        if self.schedule is None:
            return model.eps(x, t, self.label)
        return cfg_eps(model, x, t, self.label, self.schedule.scale_at(t))


def cfg_eps(model: ScoreModel, x, t, condition, scale: float):
    """Classifier-free combination ``eps_uncond + scale*(eps_cond - eps_uncond)``.

    ``scale`` 0 and 1 return the unconditional / conditional prediction
    exactly rather than through the arithmetic recombination.
    """
    if not model.supports_conditioning:
        raise CapabilityError("model has no conditional branch for guidance")
    if scale == 0.0:
        return model.eps(x, t, None)
    eps_c = model.eps(x, t, condition)
    if scale == 1.0:
        return eps_c
    eps_u = model.eps(x, t, None)
    return eps_u + scale * (eps_c - eps_u)
