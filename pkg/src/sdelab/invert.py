"""Latent reconstruction: deterministic inversion and noise record/replay.

Two routes produce a latent that regenerates a given state:

* :func:`ddim_invert` runs the deterministic update upward in time; the
  round trip back down carries an O(1/n) discretization error.
* :func:`cycle_record` draws an explicit forward noise chain and solves, at
  every step, for the noise the stochastic sampler would have needed to walk
  that chain backward.  Replaying the solved noises reproduces the input to
  floating-point accuracy, and replaying from an edited latent yields an
  edit that stays on the learned manifold.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import math
import numpy as np

from .errors import DomainError, RecordError
from .rng import CTX_FORWARD, NoiseStream
from .schedule import DEFAULT_MIN_TIME, NoiseSchedule, TimeGrid, make_time_grid
from .sampler import _clamped_for_model, _model_eps, forward_perturb
from .score import Guidance, ScoreModel

_HEADER = struct.Struct("<3d")


@dataclass(frozen=True)
class CycleNoiseRecord:
    """Per-step noises and scales extracted while noising a state.

    ``noises[k]`` and ``sigmas[k]`` belong to the step whose upper time is
    ``grid.times[k+1]``; ``states[k]`` is the forward-chain state at
    ``grid.times[k]`` (kept for mask pinning during edits).
    """

    grid: TimeGrid
    latent_at_t0: np.ndarray
    noises: np.ndarray
    sigmas: np.ndarray
    guidance: Guidance | None = None
    states: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.noises) != self.grid.n or len(self.sigmas) != self.grid.n:
            raise RecordError("one noise and sigma per grid step required")
        if self.states is not None and len(self.states) != len(self.grid):
            raise RecordError("one forward state per grid time required")


def ddim_invert(x0, model: ScoreModel, grid: TimeGrid,
                guidance: Guidance | None = None, keep_states: bool = False):
    """Deterministic inversion from the grid base up to its top.

    Each upward step builds the state at ``times[i]`` from the noise
    prediction evaluated at the previous (lower) time.  A grid whose first
    time equals its last is a no-op.
    """
    grid = _clamped_for_model(grid, model)
    times = grid.times
    schedule = model.schedule
    x = np.asarray(x0, dtype=np.float64)
    states = [x]
    for i in range(1, len(times)):
        lo, hi = times[i - 1], times[i]
        ab_lo = float(schedule.alpha_bar(lo))
        ab_hi = float(schedule.alpha_bar(hi))
        c1 = math.sqrt(ab_hi / ab_lo)
        c2 = math.sqrt(1.0 - ab_hi) - c1 * math.sqrt(1.0 - ab_lo)
        eps = _model_eps(model, x, lo, guidance)
        x = c1 * x + c2 * np.asarray(eps, dtype=np.float64)
        if keep_states:
            states.append(x)
    if keep_states:
        return states
    return x


def cycle_record(x0, model: ScoreModel, grid: TimeGrid,
                 rng: NoiseStream | int, guidance: Guidance | None = None,
                 keep_states: bool = True) -> CycleNoiseRecord:
    """Noise the state up the grid and solve the replay noises.

    The input lives at ``grid.times[0]``, which must be positive: the step
    down to the grid base would otherwise have zero scale and the noise
    solve divides by it.
    """
    grid = _clamped_for_model(grid, model)
    times = grid.times
    if times[0] <= 0.0:
        raise RecordError("record grids must start at a positive time; "
                          "clamp the grid base")
    stream = rng if isinstance(rng, NoiseStream) else NoiseStream(rng, CTX_FORWARD)
    schedule = model.schedule
    x = np.asarray(x0, dtype=np.float64)
    n = grid.n
    states = np.empty((n + 1,) + x.shape)
    states[0] = x
    noises = np.empty((n,) + x.shape)
    sigmas = np.empty(n)
    for i in range(1, n + 1):
        lo, hi = times[i - 1], times[i]
        w = stream.normal(i, x.shape)
        x_hi = forward_perturb(states[i - 1], schedule, hi, lo, noise=w)
        states[i] = x_hi
        c1, c2, sigma = schedule.step_coeffs(hi, lo, 1.0)
        if sigma == 0.0:
            raise RecordError(f"degenerate step to t={lo}: sigma is zero")
        eps = _model_eps(model, x_hi, hi, guidance)
        noises[i - 1] = (states[i - 1] - c1 * x_hi - c2 * eps) / sigma
        sigmas[i - 1] = sigma
    return CycleNoiseRecord(grid, states[n].copy(), noises, sigmas, guidance,
                            states if keep_states else None)


def cycle_replay(record: CycleNoiseRecord, start, model: ScoreModel,
                 guidance: Guidance | None = None, mask=None):
    """Run the stochastic sampler with the recorded noises substituted.

    Starting from ``record.latent_at_t0`` reproduces the recorded input.
    ``guidance`` defaults to the recording guidance; a different scale
    schedule is rejected because the noise solve is only valid under the
    noise predictions it was computed with (a different condition label is
    allowed: that is the domain-transfer mechanism).  With ``mask`` given
    (nonzero = editable), the complement is pinned to the recorded forward
    state after every step.
    """
    start = np.asarray(start, dtype=np.float64)
    if start.shape != record.latent_at_t0.shape:
        raise RecordError("start state has the wrong shape for this record")
    if guidance is None:
        guidance = record.guidance
    else:
        rec_sched = None if record.guidance is None else record.guidance.schedule
        if (guidance.schedule is None) != (rec_sched is None) or (
                guidance.schedule is not None and guidance.schedule != rec_sched):
            raise RecordError("replay guidance scale schedule differs from "
                              "the one used during recording")
    pin = None
    if mask is not None:
        if record.states is None:
            raise RecordError("mask pinning needs a record kept with states")
        pin = ~(np.asarray(mask) != 0)
        if pin.shape != start.shape:
            raise RecordError("mask shape differs from the state shape")
    grid = record.grid
    times = grid.times
    schedule = model.schedule
    x = start
    if pin is not None:
        x = x.copy()
        x[pin] = record.states[grid.n][pin]
    for i in range(grid.n, 0, -1):
        s, t = times[i], times[i - 1]
        c1, c2, sigma = schedule.step_coeffs(s, t, 1.0)
        eps = _model_eps(model, x, s, guidance)
        x = c1 * x + c2 * np.asarray(eps, dtype=np.float64) + sigma * record.noises[i - 1]
        if pin is not None:
            x[pin] = record.states[i - 1][pin]
    return x


# -- binary serialization ----------------------------------------------------


def save_record(record: CycleNoiseRecord, path) -> None:
    """Write a record as little-endian float64: (dim, n, t0), latent, noises.

    Only unguided records over the canonical uniform clamped grid are
    serializable; the grid and step scales are reconstructed from the header
    on load.
    """
    if record.guidance is not None:
        raise RecordError("guided records are not serializable")
    latent = np.asarray(record.latent_at_t0, dtype=np.float64)
    if latent.ndim != 1:
        raise RecordError("serialize flattened (1-D) records")
    n = record.grid.n
    t0 = record.grid.t0
    canonical = np.linspace(0.0, t0, n + 1)
    canonical[0] = DEFAULT_MIN_TIME
    if not np.array_equal(record.grid.times, canonical):
        raise RecordError("only canonical uniform clamped grids serialize")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(float(latent.size), float(n), t0))
        fh.write(latent.astype("<f8").tobytes())
        fh.write(np.asarray(record.noises, dtype="<f8").tobytes())


def load_record(path, schedule: NoiseSchedule) -> CycleNoiseRecord:
    """Read a record written by :func:`save_record`."""
    with open(path, "rb") as fh:
        dim_f, n_f, t0 = _HEADER.unpack(fh.read(_HEADER.size))
        dim, n = int(dim_f), int(n_f)
        latent = np.frombuffer(fh.read(8 * dim), dtype="<f8").copy()
        noises = np.frombuffer(fh.read(8 * n * dim), dtype="<f8").copy()
    if latent.size != dim or noises.size != n * dim:
        raise RecordError("record file is truncated")
    grid = make_time_grid(schedule, n, t0).clamped(DEFAULT_MIN_TIME)
    sigmas = np.array([schedule.step_sigma(grid.times[i], grid.times[i - 1], 1.0)
                       for i in range(1, n + 1)])
    return CycleNoiseRecord(grid, latent, noises.reshape(n, dim), sigmas)
