"""Point-based latent editing: patch dragging, inpainting, domain transfer.

The dragging loop alternates three moves, ``m`` times along the source to
target segment: noise the image up to an intermediate time while memorizing
the noises, copy the patch around the current point onto the next one in the
noisy latent (amplified by ``alpha``, with the vacated source area blended
toward fresh noise by ``beta``), then replay the memorized noises back down.
The deterministic variant uses inversion and the deterministic sampler for
the two trajectory stages but shares every other ingredient, including the
patch-perturbation noise stream, so paired runs isolate the solver choice.

Images are 2-D float arrays; models see them flattened.
"""

from __future__ import annotations

from dataclasses import dataclass

import math
import numpy as np

from .errors import DomainError, EditError
from .invert import cycle_record, cycle_replay, ddim_invert
from .rng import (CTX_EDIT, CTX_FORWARD, CTX_PIN, CTX_PRIOR, CTX_STEP,
                  NoiseStream, derive_seed)
from .sampler import forward_perturb, reverse_steps
from .schedule import DEFAULT_MIN_TIME, TimeGrid, make_time_grid
from .score import Guidance, GuidanceSchedule, ScoreModel


@dataclass(frozen=True)
class DragSpec:
    """Geometry and strength of a drag edit.

    ``pairs`` holds ``((y_src, x_src), (y_tgt, x_tgt))`` pixel coordinates.
    ``m=None`` resolves to ``ceil(max pair distance / 2)`` (at least 1).
    ``mask`` (optional) is a 0/1 image; nonzero marks the editable region.
    """

    pairs: tuple
    radius: int = 5
    alpha: float = 1.1
    beta: float = 0.3
    m: int | None = None
    t0: float = 0.6
    n: int = 120
    mask: np.ndarray | None = None

    def __post_init__(self) -> None:
        if len(self.pairs) == 0:
            raise DomainError("at least one source/target pair required")
        if self.radius < 1:
            raise DomainError("radius must be at least one pixel")
        if self.alpha < 1.0:
            raise DomainError("alpha must be at least 1")
        if not 0.0 <= self.beta <= 1.0:
            raise DomainError("beta must lie in [0, 1]")
        if self.m is not None and self.m < 1:
            raise DomainError("m must be positive (or None for automatic)")
        if self.n < 1 or not 0.0 < self.t0 <= 1.0:
            raise DomainError("invalid trajectory parameters")

    def resolved_m(self) -> int:
        if self.m is not None:
            return self.m
        dist = max(math.dist(src, tgt) for src, tgt in self.pairs)
        return max(1, math.ceil(dist / 2.0))

    def validate_against(self, shape) -> None:
        h, w = shape
        for src, tgt in self.pairs:
            for y, x in (src, tgt):
                if not (0 <= y < h and 0 <= x < w):
                    raise DomainError(f"point ({y}, {x}) outside the image")
        if self.mask is not None and self.mask.shape != (h, w):
            raise DomainError("mask shape differs from the image shape")


def intermediate_targets(a_s, a_t, m: int):
    """The m waypoints at fractions j/m along the segment, pixel-rounded.

    The last waypoint is exactly the target point.
    """
    if m < 1:
        raise DomainError("m must be positive")
    ys, xs = a_s
    yt, xt = a_t
    points = []
    for j in range(1, m + 1):
        if j == m:
            points.append((int(yt), int(xt)))
        else:
            frac = j / m
            points.append((_round_half_up(ys + frac * (yt - ys)),
                           _round_half_up(xs + frac * (xt - xs))))
    return points


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def copy_paste(latent, source, target, radius: int, alpha: float, beta: float,
               rng: np.random.Generator):
    """Copy the square patch at ``source`` onto ``target`` in one latent.

    The target square receives ``alpha`` times the source pixels (only
    offsets where both ends are in bounds are copied); the vacated source
    area outside the target square is blended as
    ``beta * x + sqrt(1-beta^2) * eps`` with fresh standard noise.  Pixels
    outside the two squares are untouched.
    """
    latent = np.asarray(latent, dtype=np.float64)
    h, w = latent.shape
    ys, xs = source
    yt, xt = target
    r = radius
    dy_lo = max(-r, -ys, -yt)
    dy_hi = min(r, h - ys, h - yt)
    dx_lo = max(-r, -xs, -xt)
    dx_hi = min(r, w - xs, w - xt)
    if dy_lo >= dy_hi or dx_lo >= dx_hi:
        raise EditError("patch fully clipped: no valid source/target overlap")
    out = latent.copy()
    out[yt + dy_lo:yt + dy_hi, xt + dx_lo:xt + dx_hi] = (
        alpha * latent[ys + dy_lo:ys + dy_hi, xs + dx_lo:xs + dx_hi])

    in_square_s = _square_mask(h, w, ys, xs, r)
    in_square_t = _square_mask(h, w, yt, xt, r)
    vacated = in_square_s & ~in_square_t
    count = int(vacated.sum())
    if count and beta != 1.0:
        eps = rng.standard_normal(count)
        out[vacated] = beta * latent[vacated] + math.sqrt(1.0 - beta * beta) * eps
    return out


def _square_mask(h, w, y, x, r):
    mask = np.zeros((h, w), dtype=bool)
    mask[max(0, y - r):min(h, y + r), max(0, x - r):min(w, x + r)] = True
    return mask


def _drag_grid(model: ScoreModel, spec: DragSpec) -> TimeGrid:
    grid = make_time_grid(model.schedule, spec.n, spec.t0)
    return grid.clamped(max(model.min_time, DEFAULT_MIN_TIME))


def _paths(spec: DragSpec, m: int):
    """Per-pair waypoint lists, prefixed with the source point."""
    return [[tuple(src)] + intermediate_targets(src, tgt, m)
            for src, tgt in spec.pairs]


def sde_drag(x0, model: ScoreModel, spec: DragSpec, seed: int,
             guidance: Guidance | None = None):
    """Stochastic drag: record, copy-paste, replay, m times."""
    return _drag(x0, model, spec, seed, guidance, stochastic=True)


def ode_drag(x0, model: ScoreModel, spec: DragSpec, seed: int,
             guidance: Guidance | None = None):
    """Deterministic counterpart: inversion and deterministic sampling."""
    return _drag(x0, model, spec, seed, guidance, stochastic=False)


def _drag(x0, model, spec, seed, guidance, stochastic):
    x0 = np.asarray(x0, dtype=np.float64)
    shape = x0.shape
    spec.validate_against(shape)
    grid = _drag_grid(model, spec)
    m = spec.resolved_m()
    paths = _paths(spec, m)
    mask_flat = None if spec.mask is None else np.asarray(spec.mask).reshape(-1)
    pin = None if mask_flat is None else ~(mask_flat != 0)
    x = x0.reshape(-1)
    for j in range(1, m + 1):
        edit_rng = NoiseStream(seed, CTX_EDIT).generator(j)
        if stochastic:
            record = cycle_record(x, model, grid,
                                  NoiseStream(derive_seed(seed, j), CTX_FORWARD),
                                  guidance)
            latent = record.latent_at_t0.reshape(shape)
        else:
            states = ddim_invert(x, model, grid, guidance, keep_states=True)
            latent = states[-1].reshape(shape)
        for path in paths:
            latent = copy_paste(latent, path[j - 1], path[j], spec.radius,
                                spec.alpha, spec.beta, edit_rng)
        latent = latent.reshape(-1)
        if stochastic:
            x = cycle_replay(record, latent, model, guidance, mask=mask_flat)
        else:
            if pin is not None:
                latent = latent.copy()
                latent[pin] = states[-1][pin]
            x = _ddim_down(latent, model, grid, guidance, states, pin)
    return x.reshape(shape)


def _ddim_down(latent, model, grid, guidance, inversion_states, pin):
    if pin is None:
        return reverse_steps(model, latent, grid, 0.0, None, guidance)
    # Step one interval at a time so each result can have its unmasked part
    # replaced by the stage-one state at the matching time.
    times = grid.times
    x = latent
    for i in range(grid.n, 0, -1):
        x = reverse_steps(model, x, TimeGrid(times[i - 1:i + 1]), 0.0, None,
                          guidance)
        x[pin] = inversion_states[i - 1][pin]
    return x


def inpaint(observed, mask, model: ScoreModel, eta: float, grid: TimeGrid,
            seed: int, guidance: Guidance | None = None):
    """Synthesize the nonzero-mask region conditioned on the rest.

    Starts from a standard-normal latent at the grid top; after every reverse
    step the observed (zero-mask) region of the latent is overwritten with the
    observation pushed forward to the matching time.  One perturbation draw is
    shared across all pin times (a time-consistent coupling of the
    noise-adding process), so the deterministic variant stays deterministic.
    The final composite carries the observation exactly.
    """
    observed = np.asarray(observed, dtype=np.float64)
    shape = observed.shape
    mask = np.asarray(mask)
    if mask.shape != shape:
        raise DomainError("mask shape differs from the observation shape")
    free = (mask != 0).reshape(-1)
    if not free.any():
        return observed.copy()
    if grid.times[0] < model.min_time:
        grid = grid.clamped(max(model.min_time, DEFAULT_MIN_TIME))
    times = grid.times
    keep = ~free
    obs = observed.reshape(-1)
    x = NoiseStream(seed, CTX_PRIOR).generator(0).standard_normal(obs.shape)
    pin_eps = NoiseStream(seed, CTX_PIN).normal(0, obs.shape)
    step_stream = NoiseStream(seed, CTX_STEP) if eta > 0.0 else None
    if keep.any():
        y_top = forward_perturb(obs, model.schedule, times[-1], 0.0,
                                noise=pin_eps)
        x[keep] = y_top[keep]
    for i in range(grid.n, 0, -1):
        x = reverse_steps(model, x, TimeGrid(times[i - 1:i + 1]), eta,
                          step_stream.normal if step_stream else None, guidance)
        if keep.any():
            if i - 1 == 0:
                x[keep] = obs[keep]
            else:
                y = forward_perturb(obs, model.schedule, times[i - 1], 0.0,
                                    noise=pin_eps)
                x[keep] = y[keep]
    return x.reshape(shape)


def domain_transfer(x0, model: ScoreModel, source_label, target_label,
                    mode: str, grid: TimeGrid, seed: int,
                    guidance: GuidanceSchedule | None = None):
    """Move a state from one class manifold to another.

    ``mode="ode"`` inverts under the source label and deterministically
    samples under the target label; ``mode="cycle_sde"`` records the noise
    chain under the source label and replays it under the target label.
    """
    src = Guidance(source_label, guidance)
    tgt = Guidance(target_label, guidance)
    x0 = np.asarray(x0, dtype=np.float64)
    shape = x0.shape
    flat = x0.reshape(-1)
    if mode == "ode":
        latent = ddim_invert(flat, model, grid, src)
        return reverse_steps(model, latent, grid, 0.0, None, tgt).reshape(shape)
    if mode == "cycle_sde":
        record = cycle_record(flat, model, grid,
                              NoiseStream(seed, CTX_FORWARD), src,
                              keep_states=False)
        out = cycle_replay(record, record.latent_at_t0, model, tgt)
        return out.reshape(shape)
    raise DomainError(f"unknown transfer mode {mode!r}")
