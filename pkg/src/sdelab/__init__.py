"""Diffusion sampling and editing as a checkable stochastic-process lab.

Variance-preserving schedules, the unified stochastic/deterministic sampler,
exact analytic score models, noise-record inversion, patch-based latent
editing, and divergence diagnostics that verify the contraction and
invariance laws numerically.
"""

from .backends import backend_name
from .schedule import DEFAULT_MIN_TIME, NoiseSchedule, TimeGrid, make_time_grid
from .score import (EmpiricalDataset, GaussianData, GaussianMixture1D,
                    Guidance, GuidanceSchedule, cfg_eps, eps_to_score,
                    guidance_scale_at, score_to_eps)
from .sampler import (Prior, SamplerConfig, Trajectory, ddim_sample,
                      forward_perturb, reverse_steps, sample, unified_step)
from .invert import (CycleNoiseRecord, cycle_record, cycle_replay, ddim_invert,
                     load_record, save_record)
from .edit import (DragSpec, copy_paste, domain_transfer, inpaint,
                   intermediate_targets, ode_drag, sde_drag)
from .metrics import (DivergenceReport, GaussianMoments, MCEstimate,
                      cycle_contraction_check, fisher_mc, gaussian_fisher,
                      gaussian_flow_moments, gaussian_reverse_sde_moments,
                      kl_gaussian, kl_histogram, kl_mc, kl_vs_density,
                      lsi_rate_check, nearest_dataset_distance,
                      ode_invariance_check, ode_invariance_check_transport,
                      sde_contraction_check, sde_contraction_check_mc)
from .testbed import BumpTestbed

__version__ = "0.1.0"

__all__ = [
    "BumpTestbed", "CycleNoiseRecord", "DEFAULT_MIN_TIME", "DivergenceReport",
    "DragSpec", "EmpiricalDataset", "GaussianData", "GaussianMixture1D",
    "GaussianMoments", "Guidance", "GuidanceSchedule", "MCEstimate",
    "NoiseSchedule", "Prior", "SamplerConfig", "TimeGrid", "Trajectory",
    "backend_name", "cfg_eps", "copy_paste", "cycle_contraction_check",
    "cycle_record", "cycle_replay", "ddim_invert", "ddim_sample",
    "domain_transfer", "eps_to_score", "fisher_mc", "forward_perturb",
    "gaussian_fisher", "gaussian_flow_moments", "gaussian_reverse_sde_moments",
    "guidance_scale_at", "inpaint", "intermediate_targets", "kl_gaussian",
    "kl_histogram", "kl_mc", "kl_vs_density", "lsi_rate_check",
    "make_time_grid", "nearest_dataset_distance", "ode_drag",
    "ode_invariance_check", "ode_invariance_check_transport", "reverse_steps",
    "sample", "save_record", "load_record", "score_to_eps",
    "sde_contraction_check", "sde_contraction_check_mc", "sde_drag",
    "unified_step",
]
