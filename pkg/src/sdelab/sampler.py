"""Forward perturbation and the unified stochastic/deterministic sampler.

The single update (``eta`` interpolating between the deterministic and the
stochastic step) reads

    x_t = sqrt(abar_t) (x_s - sqrt(1-abar_s) eps) / sqrt(abar_s)
          + sqrt(1 - abar_t - sigma^2) eps + sigma w,

with ``sigma = eta sqrt((1-abar_t)/(1-abar_s)) sqrt(1-abar_s/abar_t)`` and
``eps`` evaluated at ``(x_s, s)``.  Trajectory drivers run this update down a
time grid from draws of a configurable prior; all noise comes from
counter-based streams so results are reproducible regardless of execution
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import math
import numpy as np

from . import backends
from .errors import DomainError, OrderingError
from .rng import CTX_PRIOR, CTX_STEP, NoiseStream
from .schedule import NoiseSchedule, TimeGrid
from .score import GaussianMixture1D, Guidance, ScoreModel


@dataclass(frozen=True)
class Prior:
    """Initial distribution at the top of the time grid."""

    kind: str
    dimension: int = 1
    mean: float = 0.0
    variance: float = 1.0
    lo: float = -1.0
    hi: float = 1.0
    point: np.ndarray | None = None

    @classmethod
    def standard_normal(cls, dimension: int = 1) -> "Prior":
        return cls("standard_normal", dimension)

    @classmethod
    def normal(cls, mean: float, variance: float, dimension: int = 1) -> "Prior":
        if variance <= 0:
            raise DomainError("variance must be positive")
        return cls("normal", dimension, mean=mean, variance=variance)

    @classmethod
    def uniform(cls, lo: float, hi: float, dimension: int = 1) -> "Prior":
        if not lo < hi:
            raise DomainError("require lo < hi")
        return cls("uniform", dimension, lo=lo, hi=hi)

    @classmethod
    def point_mass(cls, x) -> "Prior":
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        return cls("point_mass", x.size, point=x)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        shape = (n,) if self.dimension == 1 else (n, self.dimension)
        if self.kind == "standard_normal":
            return rng.standard_normal(shape)
        if self.kind == "normal":
            return self.mean + math.sqrt(self.variance) * rng.standard_normal(shape)
        if self.kind == "uniform":
            return rng.uniform(self.lo, self.hi, size=shape)
        if self.kind == "point_mass":
            x = self.point if self.dimension > 1 else float(self.point[0])
            return np.broadcast_to(x, shape).copy()
        raise DomainError(f"unknown prior kind {self.kind!r}")


@dataclass(frozen=True)
class SamplerConfig:
    """Everything a sampling run needs besides the model and prior."""

    eta: float
    grid: TimeGrid
    seed: int
    guidance: Guidance | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError("eta must lie in [0, 1]")


@dataclass(frozen=True)
class Trajectory:
    """States aligned with grid times (index i holds the state at times[i])."""

    grid: TimeGrid
    states: np.ndarray

    def __post_init__(self) -> None:
        if len(self.states) != len(self.grid):
            raise DomainError("one state per grid time required")
        if not np.all(np.isfinite(np.asarray(self.states))):
            raise DomainError("trajectory contains non-finite entries")


def forward_perturb(x0, schedule: NoiseSchedule, s: float, t: float = 0.0,
                    noise=None, rng: np.random.Generator | None = None):
    """Push a state from noise level t up to level s > t.

    ``x_s = sqrt(abar_s/abar_t) x_t + sqrt(1 - abar_s/abar_t) w`` with
    standard-normal ``w``; with ``t = 0`` this is the one-shot perturbation
    kernel.  ``s == t`` returns a copy unchanged.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if s < t:
        raise OrderingError(f"require s >= t, got s={s}, t={t}")
    if s == t:
        return x0.copy()
    ab_s = float(schedule.alpha_bar(s))
    ab_t = float(schedule.alpha_bar(t))
    ratio = ab_s / ab_t
    if noise is None:
        if rng is None:
            raise DomainError("provide noise or rng for a stochastic step")
        noise = rng.standard_normal(x0.shape)
    return math.sqrt(ratio) * x0 + math.sqrt(1.0 - ratio) * noise


def unified_step(x_s, s: float, t: float, eps, eta: float,
                 schedule: NoiseSchedule, noise=None,
                 rng: np.random.Generator | None = None):
    """One reverse update from time s down to t < s.

    ``eps`` must be the noise prediction evaluated at ``(x_s, s)``.  Noise is
    only consumed when the step scale is positive; deterministic steps are
    bit-reproducible for fixed inputs.
    """
    c1, c2, sigma = schedule.step_coeffs(s, t, eta)
    x_s = np.asarray(x_s, dtype=np.float64)
    out = c1 * x_s + c2 * np.asarray(eps, dtype=np.float64)
    if sigma > 0.0:
        if noise is None:
            if rng is None:
                raise DomainError("provide noise or rng for a stochastic step")
            noise = rng.standard_normal(x_s.shape)
        out += sigma * noise
    return out


def _clamped_for_model(grid: TimeGrid, model: ScoreModel) -> TimeGrid:
    if model.min_time > 0.0 and grid.times[0] < model.min_time:
        return grid.clamped(model.min_time)
    return grid


def _model_eps(model: ScoreModel, x, t: float, guidance: Guidance | None):
    if guidance is not None:
        return guidance.eps(model, x, t)
    return model.eps(x, t)


def reverse_steps(model: ScoreModel, x, grid: TimeGrid, eta: float,
                  noise_fn=None, guidance: Guidance | None = None,
                  keep_states: bool = False):
    """Run the unified update from the grid top down to its base.

    ``x`` is the state at ``grid.times[-1]``.  ``noise_fn(i, shape)`` supplies
    the noise for the step whose upper time is ``times[i]``; it is only called
    when that step's sigma is positive.  Returns the final state, or the full
    list of states (aligned to grid times) when ``keep_states`` is set.
    """
    grid = _clamped_for_model(grid, model)
    times = grid.times
    schedule = model.schedule
    x = np.asarray(x, dtype=np.float64)
    states = [None] * len(times)
    states[-1] = x
    fast_gm = isinstance(model, GaussianMixture1D) and guidance is None
    for i in range(len(times) - 1, 0, -1):
        s, t = times[i], times[i - 1]
        c1, c2, sigma = schedule.step_coeffs(s, t, eta)
        noise = noise_fn(i, x.shape) if (sigma > 0.0 and noise_fn is not None) else None
        if sigma > 0.0 and noise is None:
            raise DomainError("stochastic step requested without a noise source")
        if fast_gm:
            mu_s, var_s = model.diffused_params(s)
            ab_s = model.schedule.alpha_bar(s)
            x = backends.gm1d_step(x, mu_s, var_s, math.sqrt(1.0 - ab_s),
                                   c1, c2, sigma, noise)
        else:
            eps = _model_eps(model, x, s, guidance)
            x = c1 * x + c2 * eps
            if sigma > 0.0:
                x = x + sigma * noise
        if keep_states:
            states[i - 1] = x
    if keep_states:
        return states
    return x


def sample(model: ScoreModel, config: SamplerConfig, prior: Prior,
           particles: int, keep_trajectory: bool = False):
    """Draw a particle ensemble from the prior and run it down the grid.

    Deterministic given ``(config.seed, particle index)``: the prior block and
    each step's noise block are keyed by the seed and the step index, with the
    particle index selecting the row.
    """
    if particles < 1:
        raise DomainError("need at least one particle")
    if prior.dimension != model.dimension:
        raise DomainError("prior and model dimensions differ")
    grid = _clamped_for_model(config.grid, model)
    prior_rng = NoiseStream(config.seed, CTX_PRIOR).generator(0)
    x = prior.draw(prior_rng, particles)
    step_stream = NoiseStream(config.seed, CTX_STEP)
    noise_fn = step_stream.normal if config.eta > 0.0 else None
    result = reverse_steps(model, x, grid, config.eta, noise_fn,
                           config.guidance, keep_states=keep_trajectory)
    if keep_trajectory:
        return result[0], Trajectory(grid, np.asarray(result))
    return result


def ddim_sample(model: ScoreModel, x_top, grid: TimeGrid,
                guidance: Guidance | None = None, keep_states: bool = False):
    """Deterministic trajectory from a given latent at the grid top."""
    return reverse_steps(model, x_top, grid, 0.0, None, guidance, keep_states)
