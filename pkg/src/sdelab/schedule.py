"""Noise schedules for variance-preserving diffusion.

A schedule defines the signal-retention curve ``abar(t)`` on the normalized
horizon ``[0, T]`` (``T = 1``), together with the drift/diffusion coefficients
of the equivalent forward SDE

    dx = f(t) x dt + g(t) dw,
    f(t) = d log abar / dt / 2,
    g^2(t) = -d abar/dt - (d log abar/dt) (1 - abar),

and the per-step standard deviation of the unified stochastic/deterministic
sampler update.  Two analytic families are provided:

* ``cosine``: squared-cosine curve with a small smoothing offset, so that
  abar(0) = 1 exactly and abar(T) is vanishingly small.
* ``linear``: linearly increasing noise rate ``beta(t)``, for which
  ``g^2(t) = beta(t)`` is bounded on the whole horizon.

All derivatives are closed-form; nothing is finite-differenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, OrderingError

#: Smallest positive time used when a model or record cannot touch t = 0.
DEFAULT_MIN_TIME = 1e-5

_COSINE_OFFSET = 0.008
_LINEAR_BETA_MIN = 0.1
_LINEAR_BETA_MAX = 20.0


@dataclass(frozen=True)
class NoiseSchedule:
    """Immutable signal-retention schedule on the normalized horizon.

    Parameters
    ----------
    kind : str
        ``"cosine"`` or ``"linear"``.
    horizon : float
        Terminal time ``T``; fixed at 1.0 by convention.
    offset : float
        Smoothing constant of the cosine curve (ignored for ``linear``).
    grid_resolution : int
        Size of the validation table on which the construction-time
        invariants (monotonicity, nonnegative ``g^2``, the VP identity
        ``f = -g^2/2``) are checked.
    """

    kind: str
    horizon: float = 1.0
    offset: float = _COSINE_OFFSET
    grid_resolution: int = 1000
    beta_min: float = field(default=_LINEAR_BETA_MIN, repr=False)
    beta_max: float = field(default=_LINEAR_BETA_MAX, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in ("cosine", "linear"):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")
        if self.grid_resolution < 2:
            raise DomainError("grid_resolution must be at least 2")
        norm = float(np.cos(self._cos_angle(0.0))) ** 2
        object.__setattr__(self, "_cos_norm", norm)
        self._validate()

    # -- core curve ------------------------------------------------------

    def alpha_bar(self, t):
        """Signal-retention coefficient abar(t); strictly decreasing in t.

        Accepts scalars or arrays; raises :class:`DomainError` outside
        ``[0, T]``.
        """
        t = self._check_time(t)
        if self.kind == "cosine":
            u = self._cos_angle(t)
            # Clip the normalized ratio at 1 and pin t = 0 exactly: the true
            # ratio is 1 there and any excess is transcendental rounding.
            raw = np.minimum(np.cos(u) ** 2 / self._cos_norm, 1.0)
            out = np.where(np.asarray(t) == 0.0, 1.0, raw)
        else:
            out = np.exp(-self._beta_integral(t))
        return float(out) if np.ndim(t) == 0 else out

    def log_alpha_bar_derivative(self, t):
        """Closed-form d log abar / dt."""
        t = self._check_time(t)
        if self.kind == "cosine":
            return -2.0 * np.tan(self._cos_angle(t)) * self._cos_angle_rate()
        return -self._beta(t)

    def alpha_bar_derivative(self, t):
        """Closed-form d abar / dt."""
        t = self._check_time(t)
        if self.kind == "cosine":
            u = self._cos_angle(t)
            return -np.sin(2.0 * u) * self._cos_angle_rate() / self._cos_norm
        return -self._beta(t) * np.exp(-self._beta_integral(t))

    def vp_coefficients(self, t):
        """Drift coefficient ``f(t)`` and squared diffusion ``g^2(t)``.

        ``f = (d log abar/dt)/2`` and
        ``g^2 = -d abar/dt - (d log abar/dt)(1 - abar)``, both from the
        analytic derivatives.  They satisfy ``f = -g^2/2`` identically.
        """
        t = self._check_time(t)
        dlog = self.log_alpha_bar_derivative(t)
        dabar = self.alpha_bar_derivative(t)
        g2 = -dabar - dlog * (1.0 - self.alpha_bar(t))
        return 0.5 * dlog, g2

    def g2(self, t):
        """Squared diffusion coefficient alone (``-d log abar/dt``)."""
        return -self.log_alpha_bar_derivative(t)

    def g2_integral(self, s, t):
        """Exact ``int_s^t g^2(tau) dtau = log(abar(s)/abar(t))`` for s <= t."""
        if np.any(np.asarray(s) > np.asarray(t)):
            raise OrderingError("require s <= t")
        return np.log(self.alpha_bar(s)) - np.log(self.alpha_bar(t))

    # -- sampler step scale ----------------------------------------------

    def step_sigma(self, s: float, t: float, eta: float) -> float:
        """Noise scale of the unified update from time s down to t < s.

        ``sigma = eta * sqrt((1-abar_t)/(1-abar_s)) * sqrt(1-abar_s/abar_t)``;
        ``eta = 0`` gives the deterministic update and ``eta = 1`` the
        stochastic one.  Satisfies ``sigma^2 <= 1 - abar_t``.
        """
        if not 0.0 <= eta <= 1.0:
            raise DomainError(f"eta must lie in [0, 1], got {eta}")
        if s <= t:
            raise OrderingError(f"require s > t, got s={s}, t={t}")
        ab_s = float(self.alpha_bar(s))
        ab_t = float(self.alpha_bar(t))
        if ab_s >= 1.0:
            raise DomainError("abar(s) = 1 makes the step scale undefined")
        if eta == 0.0:
            return 0.0
        return eta * math.sqrt((1.0 - ab_t) / (1.0 - ab_s)) * math.sqrt(1.0 - ab_s / ab_t)

    def step_coeffs(self, s: float, t: float, eta: float):
        """Affine coefficients of the unified update.

        The update ``x_t = sqrt(abar_t) (x_s - sqrt(1-abar_s) eps)/sqrt(abar_s)
        + sqrt(1-abar_t-sigma^2) eps + sigma w`` rearranges to
        ``x_t = c1 x_s + c2 eps + sigma w``; returns ``(c1, c2, sigma)``.
        ``c1`` is computed from the ratio ``abar_t/abar_s`` directly, which
        is the numerically safe form when both values are tiny near T.
        """
        sigma = self.step_sigma(s, t, eta)
        ab_s = float(self.alpha_bar(s))
        ab_t = float(self.alpha_bar(t))
        c1 = math.sqrt(ab_t / ab_s)
        resid = 1.0 - ab_t - sigma * sigma
        if resid < 0.0:
            # sigma^2 <= 1 - abar_t holds algebraically; anything beyond
            # rounding indicates a genuine domain violation.
            if resid < -1e-12:
                raise DomainError(f"1 - abar_t - sigma^2 = {resid} < 0")
            resid = 0.0
        c2 = math.sqrt(resid) - c1 * math.sqrt(1.0 - ab_s)
        return c1, c2, sigma

    # -- internals ---------------------------------------------------------

    def _check_time(self, t):
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0.0) or np.any(t > self.horizon):
            raise DomainError(f"time outside [0, {self.horizon}]")
        return t if t.ndim else float(t)

    def _cos_angle(self, t):
        return ((np.asarray(t) / self.horizon + self.offset)
                / (1.0 + self.offset)) * (math.pi / 2.0)

    def _cos_angle_rate(self) -> float:
        return math.pi / (2.0 * self.horizon * (1.0 + self.offset))

    def _beta(self, t):
        frac = np.asarray(t) / self.horizon
        return self.beta_min + (self.beta_max - self.beta_min) * frac

    def _beta_integral(self, t):
        t = np.asarray(t)
        return (self.beta_min * t
                + 0.5 * (self.beta_max - self.beta_min) * t * t / self.horizon)

    def _validate(self) -> None:
        ts = np.linspace(0.0, self.horizon, self.grid_resolution + 1)
        ab = self.alpha_bar(ts)
        if ab[0] != 1.0:
            raise DomainError("abar(0) must equal 1 exactly")
        if ab[-1] > 1e-3:
            raise DomainError(f"abar(T) = {ab[-1]} exceeds 1e-3")
        if np.any(np.diff(ab) >= 0.0):
            raise DomainError("abar must be strictly decreasing")
        f, g2 = self.vp_coefficients(ts)
        if np.any(g2 < 0.0):
            raise DomainError("g^2 must be nonnegative")
        rel = np.abs(f + 0.5 * g2) / np.maximum(np.abs(f), 1e-300)
        if np.any(rel > 1e-9):
            raise DomainError("VP identity f = -g^2/2 violated beyond 1e-9")


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times from the data level up to ``t0``."""

    times: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=np.float64)
        object.__setattr__(self, "times", times)
        if times.ndim != 1 or times.size < 2:
            raise DomainError("a time grid needs at least two points")
        if times[0] < 0.0:
            raise DomainError("grid must start at a nonnegative time")
        if np.any(np.diff(times) <= 0.0):
            raise DomainError("grid times must be strictly increasing")

    @property
    def n(self) -> int:
        """Number of sampler steps (one less than the number of points)."""
        return self.times.size - 1

    @property
    def t0(self) -> float:
        return float(self.times[-1])

    def clamped(self, min_time: float = DEFAULT_MIN_TIME) -> "TimeGrid":
        """Copy with the first time raised to ``min_time`` if it is below.

        Used whenever the data level must stay strictly positive: empirical
        scores are undefined at t = 0 and noise records divide by the step
        sigma, which vanishes there.
        """
        if self.times[0] >= min_time:
            return self
        if self.times.size > 1 and self.times[1] <= min_time:
            raise DomainError("min_time collides with the second grid point")
        times = self.times.copy()
        times[0] = min_time
        return TimeGrid(times)

    def __len__(self) -> int:
        return self.times.size

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeGrid) and np.array_equal(self.times, other.times)


def make_time_grid(schedule: NoiseSchedule, n: int, t0: float) -> TimeGrid:
    """Uniform grid ``{i * t0 / n : i = 0..n}``.

    Raises :class:`DomainError` for ``n < 1`` or ``t0`` outside
    ``(0, horizon]``.
    """
    if n < 1:
        raise DomainError("need at least one step")
    if not 0.0 < t0 <= schedule.horizon:
        raise DomainError(f"t0 must lie in (0, {schedule.horizon}]")
    return TimeGrid(np.linspace(0.0, t0, n + 1))
