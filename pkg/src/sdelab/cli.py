"""Experiment runner: deterministic benches with manifest-stamped outputs.

Every subcommand resolves its configuration from built-in defaults, an
optional ``key = value`` config file, and explicit flags (in that order),
writes CSV results plus a JSON manifest echoing the resolved configuration,
and exits nonzero if any embedded check fails.  Given the same seed and
configuration, reruns produce byte-identical CSVs; only the manifest's
wall-time field differs.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, backends, gridio, metrics
from .edit import DragSpec, domain_transfer, inpaint, ode_drag, sde_drag
from .errors import DomainError
from .invert import cycle_record, cycle_replay, ddim_invert
from .rng import CTX_FORWARD, NoiseStream, derive_seed
from .sampler import Prior, SamplerConfig, ddim_sample, sample
from .schedule import NoiseSchedule, make_time_grid
from .score import GaussianData, GaussianMixture1D, Guidance, GuidanceSchedule
from .testbed import BumpTestbed

# -- configuration plumbing ---------------------------------------------------


def parse_config_file(path) -> dict:
    """Read ``key = value`` lines; '#' starts a comment."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DomainError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            cfg[key.strip()] = value.strip()
    return cfg


def resolve_config(defaults: dict, file_cfg: dict, overrides: dict) -> dict:
    """Merge defaults < config file < explicit flags; reject unknown keys."""
    resolved = dict(defaults)
    for key, raw in file_cfg.items():
        if key not in defaults:
            raise DomainError(f"unknown config key {key!r}")
        resolved[key] = _cast_like(defaults[key], raw)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in defaults:
            raise DomainError(f"unknown config key {key!r}")
        resolved[key] = value
    return resolved


def _cast_like(template, raw: str):
    if isinstance(template, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    return raw


def write_manifest(out_dir, experiment: str, config: dict, seed: int,
                   started: float, outputs: list, checks: dict | None = None):
    manifest = {
        "experiment": experiment,
        "config": config,
        "seed": seed,
        "backend": backends.backend_name(),
        "version": __version__,
        "wall_time_s": round(time.time() - started, 3),
        "outputs": outputs,
    }
    if checks is not None:
        manifest["checks"] = checks
        manifest["all_passed"] = all(bool(v) for v in checks.values())
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def _write_csv(path, header: str, rows) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _map_jobs(fn, jobs, workers: int):
    """Ordered map over job tuples, optionally across processes."""
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def _bench_testbed(cfg) -> BumpTestbed:
    return BumpTestbed(peak=cfg["peak"], kernel_scale=cfg["kernel_scale"])


# -- toy 1-D experiment --------------------------------------------------------

TOY1D_DEFAULTS = {
    "mu": 0.5, "sigma": 0.2, "schedule": "cosine", "steps": 1000,
    "particles": 100000, "t0": 1.0,
}

_TOY_PRIORS = [
    ("normal_0_1", lambda: Prior.normal(0.0, 1.0)),
    ("normal_2_4", lambda: Prior.normal(2.0, 4.0)),
    ("uniform_m2_2", lambda: Prior.uniform(-2.0, 2.0)),
]


def run_toy1d(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    schedule = NoiseSchedule(cfg["schedule"])
    model = GaussianMixture1D(cfg["mu"], cfg["sigma"], schedule)
    grid = make_time_grid(schedule, cfg["steps"], cfg["t0"])
    outputs, summary = [], []
    kl = {}
    for p_ix, (prior_name, make_prior) in enumerate(_TOY_PRIORS):
        for eta, sampler_name in ((1.0, "sde"), (0.0, "ode")):
            run_seed = derive_seed(seed, p_ix, int(eta))
            config = SamplerConfig(eta=eta, grid=grid, seed=run_seed)
            final = sample(model, config, make_prior(), cfg["particles"])
            kl_val = metrics.kl_vs_density(
                final, lambda x: model.log_density(x, 0.0))
            kl[(prior_name, sampler_name)] = kl_val
            summary.append((prior_name, sampler_name, kl_val))
            counts, edges = np.histogram(final, bins=200, range=(-3.0, 3.0))
            centers = 0.5 * (edges[:-1] + edges[1:])
            name = f"toy1d_hist_{prior_name}_{sampler_name}.csv"
            _write_csv(os.path.join(out_dir, name), "bin_center,count",
                       zip(centers.tolist(), counts.tolist()))
            outputs.append(name)
    xs = np.linspace(-3.0, 3.0, 601)
    _write_csv(os.path.join(out_dir, "toy1d_analytic_q0.csv"), "x,density",
               zip(xs.tolist(), np.exp(model.log_density(xs, 0.0)).tolist()))
    outputs.append("toy1d_analytic_q0.csv")
    _write_csv(os.path.join(out_dir, "toy1d_summary.csv"), "prior,sampler,kl",
               summary)
    outputs.append("toy1d_summary.csv")
    checks = {
        "matched_prior_both_small": kl[("normal_0_1", "sde")] < 0.02
                                    and kl[("normal_0_1", "ode")] < 0.02,
        "mismatched_sde_recovers": kl[("normal_2_4", "sde")] < 0.05
                                   and kl[("uniform_m2_2", "sde")] < 0.05,
        "mismatched_ode_fails_10x":
            kl[("normal_2_4", "ode")] >= 10 * kl[("normal_2_4", "sde")]
            and kl[("uniform_m2_2", "ode")] >= 10 * kl[("uniform_m2_2", "sde")],
    }
    return outputs, checks


# -- theorem suite --------------------------------------------------------------

THEOREM_DEFAULTS = {
    "schedule": "linear", "grid_points": 2000, "prior_mean": 2.0,
    "prior_var": 4.0, "data_var": 1.0, "t0": 1.0,
    "mc_particles": 100000, "mc_steps": 300,
    "transport_paths": 10000, "transport_steps": 2000, "transport_t0": 0.6,
    "cycle_steps": 40, "cycle_particles": 100000, "cycle_reps": 100,
    "cycle_t0": 0.6, "matched_prior": False,
}


def run_theorems(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    schedule = NoiseSchedule(cfg["schedule"])
    data = GaussianData(0.0, cfg["data_var"], schedule)
    grid = make_time_grid(schedule, cfg["grid_points"], cfg["t0"])
    pm, pv = cfg["prior_mean"], cfg["prior_var"]
    if cfg["matched_prior"]:
        pm, pv = 0.0, float(data.diffused_params(cfg["t0"])[1])

    contraction = metrics.sde_contraction_check(data, schedule, pm, pv, grid)
    invariance = metrics.ode_invariance_check(data, schedule, pm, pv, grid)
    lsi = metrics.lsi_rate_check(data, schedule, pm, pv, grid)

    cosine = NoiseSchedule("cosine")
    gm = GaussianMixture1D(0.5, 0.2, cosine)
    gm_prior = Prior.normal(pm if not cfg["matched_prior"] else 2.0, 4.0)
    transport = metrics.ode_invariance_check_transport(
        gm, gm_prior, cfg["transport_t0"], cfg["transport_paths"],
        cfg["transport_steps"], derive_seed(seed, 1))
    mc = metrics.sde_contraction_check_mc(
        gm, gm_prior, make_time_grid(cosine, cfg["mc_steps"], 1.0),
        cfg["mc_particles"], derive_seed(seed, 2))
    cycle_grid = make_time_grid(cosine, cfg["cycle_steps"],
                                cfg["cycle_t0"]).clamped()
    cycle_priors = {
        "normal_2_4": Prior.normal(2.0, 4.0),
        "uniform_m2_2": Prior.uniform(-2.0, 2.0),
        "normal_0_q": Prior.normal(0.0, 0.25),
    }
    cycle_results = {}
    for c_ix, (name, prior) in enumerate(sorted(cycle_priors.items())):
        cycle_results[name] = metrics.cycle_contraction_check(
            gm, prior, cycle_grid, cfg["cycle_particles"], cfg["cycle_reps"],
            derive_seed(seed, 3, c_ix))

    outputs = []
    for name, chk in (("contraction", contraction), ("invariance", invariance)):
        fname = f"theorem_{name}.csv"
        chk.report.write_csv(os.path.join(out_dir, fname))
        outputs.append(fname)

    def verdict(check):
        return "trivial-zero" if check.trivial_zero else bool(check.passed)

    summary = {
        "sde_contraction": {
            "verdict": verdict(contraction),
            "strictly_decreasing": contraction.strictly_decreasing,
            "residual_rel": contraction.residual_rel,
            "refinement_ratio": contraction.refinement_ratio,
        },
        "ode_invariance": {
            "verdict": verdict(invariance),
            "max_drift": invariance.max_drift,
        },
        "ode_invariance_transport": {
            "verdict": verdict(transport),
            "kl_top": transport.kl_top.value, "kl_bottom": transport.kl_bottom.value,
            "gap": transport.gap, "band": transport.band,
        },
        "sde_contraction_mc": {
            "verdict": verdict(mc),
            "kl_top": mc.kl_top, "kl_bottom": mc.kl_bottom,
        },
        "cycle_contraction": {
            name: {"verdict": verdict(chk), "successes": chk.successes,
                   "repetitions": chk.repetitions,
                   "kl_top": chk.kl_top, "kl_bottom": chk.kl_bottom}
            for name, chk in sorted(cycle_results.items())
        },
        "lsi_rate": {
            "verdict": verdict(lsi),
            "constant": lsi.constant, "max_violation": lsi.max_violation,
        },
    }
    with open(os.path.join(out_dir, "theorem_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs.append("theorem_summary.json")
    checks = {
        "sde_contraction": contraction.passed,
        "ode_invariance": invariance.passed,
        "ode_invariance_transport": transport.passed,
        "sde_contraction_mc": mc.passed,
        "cycle_contraction": all(c.passed for c in cycle_results.values()),
        "lsi_rate": lsi.passed,
    }
    return outputs, checks


# -- reconstruction -------------------------------------------------------------

RECONSTRUCT_DEFAULTS = {
    "images": 20, "steps_list": "25,50,100", "t0": 0.6,
    "guidance_scale": 3.0, "peak": 4.0, "kernel_scale": 1.0,
}


def _recon_job(args):
    (peak, kscale, t0, n, guided, gscale, image_ix, seed) = args
    schedule = NoiseSchedule("cosine")
    testbed = BumpTestbed(peak=peak, kernel_scale=kscale)
    dataset = testbed.build(schedule)
    center = testbed.centers()[image_ix]
    x0 = testbed.image(center).reshape(-1)
    grid = make_time_grid(schedule, n, t0).clamped()
    guidance = None
    if guided:
        guidance = Guidance(testbed.label_of(center),
                            GuidanceSchedule(gscale, gscale, t0))
    record = cycle_record(x0, dataset, grid,
                          NoiseStream(seed, CTX_FORWARD), guidance,
                          keep_states=False)
    cycle_err = float(np.abs(
        cycle_replay(record, record.latent_at_t0, dataset) - x0).max())
    latent = ddim_invert(x0, dataset, grid, guidance)
    ddim_err = float(np.abs(
        ddim_sample(dataset, latent, grid, guidance) - x0).max())
    return n, int(guided), image_ix, cycle_err, ddim_err


def run_reconstruct(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    steps_list = [int(s) for s in str(cfg["steps_list"]).split(",")]
    image_ixs = list(range(0, 100, max(1, 100 // cfg["images"])))[:cfg["images"]]
    jobs = [
        (cfg["peak"], cfg["kernel_scale"], cfg["t0"], n, guided,
         cfg["guidance_scale"], ix, derive_seed(seed, n, guided, ix))
        for n in steps_list for guided in (0, 1) for ix in image_ixs
    ]
    rows = _map_jobs(_recon_job, jobs, workers)
    _write_csv(os.path.join(out_dir, "reconstruct.csv"),
               "n,guided,image,cycle_max_abs_err,ddim_max_abs_err", rows)

    cyc = {(n, g): max(r[3] for r in rows if r[0] == n and r[1] == g)
           for n in steps_list for g in (0, 1)}
    ddim = {(n, g): float(np.mean([r[4] for r in rows if r[0] == n and r[1] == g]))
            for n in steps_list for g in (0, 1)}
    summary_rows = [(n, g, cyc[(n, g)], ddim[(n, g)])
                    for n in steps_list for g in (0, 1)]
    _write_csv(os.path.join(out_dir, "reconstruct_summary.csv"),
               "n,guided,cycle_max_err,ddim_mean_err", summary_rows)
    checks = {
        "cycle_exact_unguided": all(cyc[(n, 0)] <= 1e-8 for n in steps_list),
        "cycle_exact_guided": all(cyc[(n, 1)] <= 1e-6 for n in steps_list),
        "ddim_error_decreasing": all(
            ddim[(a, g)] > ddim[(b, g)]
            for g in (0, 1)
            for a, b in zip(steps_list, steps_list[1:])),
        "cycle_below_ddim": all(
            cyc[(n, g)] < ddim[(n, g)] for n in steps_list for g in (0, 1)),
    }
    return ["reconstruct.csv", "reconstruct_summary.csv"], checks


# -- drag bench ------------------------------------------------------------------

DRAG_DEFAULTS = {
    "seeds": 100, "trajectory_steps": 60, "t0": 0.6, "radius": 2,
    "alpha": 1.1, "beta": 0.3, "input_noise": 0.02,
    "peak": 4.0, "kernel_scale": 1.0,
}


def _drag_job(args):
    (peak, kscale, d, identity, seed, sig_in, radius, alpha, beta, t0, n) = args
    schedule = NoiseSchedule("cosine")
    testbed = BumpTestbed(peak=peak, kernel_scale=kscale)
    dataset = testbed.build(schedule)
    g = np.random.Generator(np.random.Philox(
        key=np.array([derive_seed(seed, d, identity), 0], dtype=np.uint64)))
    lo, hi = testbed.margin, testbed.margin + testbed.lattice
    cands = [(y, x) for y in range(lo, hi) for x in range(lo, hi - d)]
    src = cands[int(g.integers(0, len(cands)))]
    dst = (src[0], src[1] + d)
    img = testbed.image(src)
    if not identity and sig_in > 0.0:
        img = img + sig_in * g.standard_normal(img.shape)
    if identity:
        spec = DragSpec(pairs=((src, src),), radius=radius, alpha=1.0,
                        beta=1.0, m=1, t0=t0, n=n)
        target_ix = testbed.index_of(src)
    else:
        spec = DragSpec(pairs=((src, dst),), radius=radius, alpha=alpha,
                        beta=beta, t0=t0, n=n)
        target_ix = testbed.index_of(dst)
    rows = []
    for method, fn in (("sde", sde_drag), ("ode", ode_drag)):
        out = fn(img, dataset, spec, seed)
        ix, dist = metrics.nearest_dataset_distance(out, dataset)
        label = "identity" if identity else f"d{d}"
        rows.append((label, seed, method, int(ix == target_ix), ix, dist))
    return rows


def run_drag_bench(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    legs = [(0, 1), (2, 0), (4, 0)]
    jobs = [
        (cfg["peak"], cfg["kernel_scale"], d, identity,
         derive_seed(seed, d, identity, s), cfg["input_noise"], cfg["radius"],
         cfg["alpha"], cfg["beta"], cfg["t0"], cfg["trajectory_steps"])
        for d, identity in legs for s in range(cfg["seeds"])
    ]
    rows = [r for pair in _map_jobs(_drag_job, jobs, workers) for r in pair]
    _write_csv(os.path.join(out_dir, "drag_bench.csv"),
               "leg,seed,method,success,nearest_index,nearest_distance", rows)

    def rate(label, method):
        hits = [r[3] for r in rows if r[0] == label and r[2] == method]
        return sum(hits) / len(hits)

    pooled = {m: (rate("d2", m) + rate("d4", m)) / 2.0 for m in ("sde", "ode")}
    # Monotonicity in distance is asserted with a two-binomial-SE band.
    band = 2.0 * math.sqrt(0.25 / cfg["seeds"])
    mono = {m: rate("identity", m) + band >= rate("d2", m)
               and rate("d2", m) + band >= rate("d4", m)
            for m in ("sde", "ode")}
    checks = {
        "sde_beats_ode_10pp": pooled["sde"] >= pooled["ode"] + 0.10,
        "sde_majority_d2": rate("d2", "sde") > 0.5,
        "identity_99": rate("identity", "sde") >= 0.99
                       and rate("identity", "ode") >= 0.99,
        "monotone_in_distance": mono["sde"] and mono["ode"],
    }
    summary = [(m, rate("identity", m), rate("d2", m), rate("d4", m), pooled[m])
               for m in ("sde", "ode")]
    _write_csv(os.path.join(out_dir, "drag_summary.csv"),
               "method,identity_rate,d2_rate,d4_rate,pooled_rate", summary)
    return ["drag_bench.csv", "drag_summary.csv"], checks


# -- inpaint bench ----------------------------------------------------------------

INPAINT_DEFAULTS = {
    "seeds": 100, "steps_list": "25,50,100", "peak": 4.0, "kernel_scale": 1.0,
    "center_row": 8, "center_col": 10, "mask_col": 8,
}


def _inpaint_job(args):
    (peak, kscale, center, mask_col, n, eta, seed) = args
    schedule = NoiseSchedule("cosine")
    testbed = BumpTestbed(peak=peak, kernel_scale=kscale)
    dataset = testbed.build(schedule)
    observed = testbed.image(center)
    mask = np.zeros(observed.shape)
    mask[:, mask_col:] = 1.0
    grid = make_time_grid(schedule, n, 1.0)
    out = inpaint(observed, mask, dataset, eta, grid, seed)
    _, dist = metrics.nearest_dataset_distance(out, dataset)
    return n, ("sde" if eta == 1.0 else "ode"), seed, dist


def run_inpaint_bench(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    steps_list = [int(s) for s in str(cfg["steps_list"]).split(",")]
    center = (cfg["center_row"], cfg["center_col"])
    jobs = [
        (cfg["peak"], cfg["kernel_scale"], center, cfg["mask_col"], n, eta,
         derive_seed(seed, n, int(eta), s))
        for n in steps_list for eta in (1.0, 0.0) for s in range(cfg["seeds"])
    ]
    rows = _map_jobs(_inpaint_job, jobs, workers)
    _write_csv(os.path.join(out_dir, "inpaint_bench.csv"),
               "n,method,seed,nearest_distance", rows)
    mean = {(n, m): float(np.mean([r[3] for r in rows
                                   if r[0] == n and r[1] == m]))
            for n in steps_list for m in ("sde", "ode")}
    _write_csv(os.path.join(out_dir, "inpaint_summary.csv"),
               "n,sde_mean_distance,ode_mean_distance",
               [(n, mean[(n, "sde")], mean[(n, "ode")]) for n in steps_list])
    checks = {
        "sde_at_most_ode_each_n": all(
            mean[(n, "sde")] <= mean[(n, "ode")] for n in steps_list),
        "sde_fewest_steps_beats_ode_most": (
            mean[(steps_list[0], "sde")] <= mean[(steps_list[-1], "ode")]),
    }
    return ["inpaint_bench.csv", "inpaint_summary.csv"], checks


# -- translation bench ---------------------------------------------------------------

TRANSLATE_DEFAULTS = {
    "seeds": 50, "trajectory_steps": 60, "t0": 0.6,
    "peak": 4.0, "kernel_scale": 1.0,
}


def _translate_job(args):
    (peak, kscale, t0, n, mode, seed) = args
    schedule = NoiseSchedule("cosine")
    testbed = BumpTestbed(peak=peak, kernel_scale=kscale)
    dataset = testbed.build(schedule)
    centers = testbed.centers()
    left = [i for i, c in enumerate(centers) if testbed.label_of(c) == "left"]
    right_pts = dataset.points[[i for i, c in enumerate(centers)
                                if testbed.label_of(c) == "right"]]
    g = np.random.Generator(np.random.Philox(
        key=np.array([derive_seed(seed, 17), 0], dtype=np.uint64)))
    src_center = centers[left[int(g.integers(0, len(left)))]]
    img = testbed.image(src_center)
    grid = make_time_grid(schedule, n, t0).clamped()
    out = domain_transfer(img, dataset, "left", "right", mode, grid, seed)
    ix, _ = metrics.nearest_dataset_distance(out, dataset)
    success = int(testbed.label_of(centers[ix]) == "right")
    target_dist = float(np.sqrt(
        ((right_pts - out.reshape(-1)) ** 2).sum(axis=1)).min())
    return mode, seed, success, target_dist


def run_translate_bench(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    jobs = [
        (cfg["peak"], cfg["kernel_scale"], cfg["t0"], cfg["trajectory_steps"],
         mode, derive_seed(seed, mode_ix, s))
        for mode_ix, mode in enumerate(("cycle_sde", "ode"))
        for s in range(cfg["seeds"])
    ]
    rows = _map_jobs(_translate_job, jobs, workers)
    _write_csv(os.path.join(out_dir, "translate_bench.csv"),
               "mode,seed,success,target_class_distance", rows)
    stats = {}
    for mode in ("cycle_sde", "ode"):
        sel = [r for r in rows if r[0] == mode]
        stats[mode] = (sum(r[2] for r in sel) / len(sel),
                       float(np.mean([r[3] for r in sel])))
    _write_csv(os.path.join(out_dir, "translate_summary.csv"),
               "mode,success_rate,mean_target_class_distance",
               [(m,) + stats[m] for m in ("cycle_sde", "ode")])
    checks = {
        "cycle_success_at_least_ode": stats["cycle_sde"][0] >= stats["ode"][0],
        "cycle_distance_at_most_ode": stats["cycle_sde"][1] <= stats["ode"][1],
    }
    return ["translate_bench.csv", "translate_summary.csv"], checks


# -- dataset generation ----------------------------------------------------------------

GEN_DATASET_DEFAULTS = {
    "size": 16, "kernel_scale": 1.5, "peak": 1.0, "margin": 3, "lattice": 10,
}


def run_gen_dataset(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    testbed = BumpTestbed(size=cfg["size"], kernel_scale=cfg["kernel_scale"],
                          peak=cfg["peak"], margin=cfg["margin"],
                          lattice=cfg["lattice"])
    entries = testbed.write(out_dir)
    labels = [label for _, label in entries]
    checks = {
        "count": len(entries) == cfg["lattice"] ** 2,
        "balanced_labels": labels.count("left") == labels.count("right"),
    }
    return [name for name, _ in entries] + [gridio.MANIFEST_NAME], checks


# -- ensemble sampling -----------------------------------------------------------------

SAMPLE_DEFAULTS = {
    "model": "gm1d", "mu": 0.5, "sigma": 0.2, "mean": 0.0, "variance": 1.0,
    "data": "", "prior": "standard_normal", "eta": 1.0, "steps": 100,
    "particles": 1000, "t0": 1.0, "schedule": "cosine",
}


def _parse_prior(spec: str, dimension: int) -> Prior:
    if spec == "standard_normal":
        return Prior.standard_normal(dimension)
    kind, _, rest = spec.partition(":")
    args = [float(a) for a in rest.split(",")] if rest else []
    if kind == "normal" and len(args) == 2:
        return Prior.normal(args[0], args[1], dimension)
    if kind == "uniform" and len(args) == 2:
        return Prior.uniform(args[0], args[1], dimension)
    if kind == "point" and args:
        return Prior.point_mass(np.asarray(args))
    raise DomainError(f"cannot parse prior spec {spec!r}")


def run_sample(cfg: dict, out_dir: str, seed: int, workers: int = 1):
    schedule = NoiseSchedule(cfg["schedule"])
    if cfg["model"] == "gm1d":
        model = GaussianMixture1D(cfg["mu"], cfg["sigma"], schedule)
    elif cfg["model"] == "gauss":
        model = GaussianData(cfg["mean"], cfg["variance"], schedule)
    elif cfg["model"] == "dataset":
        if not cfg["data"]:
            raise DomainError("--data <dir> required for the dataset model")
        model, _ = gridio.load_dataset(cfg["data"], schedule)
    else:
        raise DomainError(f"unknown model {cfg['model']!r}")
    grid = make_time_grid(schedule, cfg["steps"], cfg["t0"])
    prior = _parse_prior(cfg["prior"], model.dimension)
    config = SamplerConfig(eta=cfg["eta"], grid=grid, seed=seed)
    final = sample(model, config, prior, cfg["particles"])
    final = np.atleast_2d(final.T).T if final.ndim == 1 else final
    rows = [(p, d, float(final[p, d]))
            for p in range(final.shape[0]) for d in range(final.shape[1])]
    _write_csv(os.path.join(out_dir, "samples.csv"), "particle,dim,value", rows)
    return ["samples.csv"], {}


# -- single-image editing commands --------------------------------------------------------


def _load_model_for_images(args, schedule):
    if args.data:
        dataset, shape = gridio.load_dataset(args.data, schedule)
        return dataset, shape
    testbed = BumpTestbed(peak=_or(args.peak, 4.0),
                          kernel_scale=_or(args.kernel_scale, 1.0))
    return testbed.build(schedule), (testbed.size, testbed.size)


def _parse_points(text: str):
    pairs = []
    for chunk in text.split(";"):
        src_txt, _, tgt_txt = chunk.partition(":")
        sy, sx = (int(v) for v in src_txt.split(","))
        ty, tx = (int(v) for v in tgt_txt.split(","))
        pairs.append(((sy, sx), (ty, tx)))
    return tuple(pairs)


def _or(value, fallback):
    return fallback if value is None else value


def run_drag_single(args, out_dir: str, seed: int):
    schedule = NoiseSchedule("cosine")
    model, shape = _load_model_for_images(args, schedule)
    image = gridio.read_grid(args.image)
    mask = gridio.read_grid(args.mask) if args.mask else None
    m_flag = _or(args.m, "auto")
    m = None if m_flag == "auto" else int(m_flag)
    spec = DragSpec(pairs=_parse_points(args.points), radius=_or(args.r, 2),
                    alpha=_or(args.alpha, 1.1), beta=_or(args.beta, 0.3),
                    m=m, t0=_or(args.t0, 0.6), n=_or(args.steps, 60),
                    mask=mask)
    fn = sde_drag if _or(args.mode, "sde") == "sde" else ode_drag
    out = fn(image, model, spec, seed)
    gridio.write_grid(args.out, out)
    return [args.out], {}


def run_inpaint_single(args, out_dir: str, seed: int):
    schedule = NoiseSchedule("cosine")
    model, _ = _load_model_for_images(args, schedule)
    image = gridio.read_grid(args.image)
    mask = gridio.read_grid(args.mask)
    grid = make_time_grid(schedule, _or(args.steps, 60), 1.0)
    eta = 1.0 if _or(args.mode, "sde") == "sde" else 0.0
    out = inpaint(image, mask, model, eta, grid, seed)
    gridio.write_grid(args.out, out)
    return [args.out], {}


def run_translate_single(args, out_dir: str, seed: int):
    schedule = NoiseSchedule("cosine")
    model, _ = _load_model_for_images(args, schedule)
    image = gridio.read_grid(args.image)
    grid = make_time_grid(schedule, _or(args.steps, 60),
                          _or(args.t0, 0.6)).clamped()
    mode = "cycle_sde" if _or(args.mode, "sde") == "sde" else "ode"
    out = domain_transfer(image, model, _or(args.source_label, "left"),
                          _or(args.target_label, "right"), mode, grid, seed)
    gridio.write_grid(args.out, out)
    return [args.out], {}


# -- argument parsing -----------------------------------------------------------------------

_BENCHES = {
    "toy1d": (TOY1D_DEFAULTS, run_toy1d),
    "theorems": (THEOREM_DEFAULTS, run_theorems),
    "reconstruct": (RECONSTRUCT_DEFAULTS, run_reconstruct),
    "drag": (DRAG_DEFAULTS, run_drag_bench),
    "inpaint": (INPAINT_DEFAULTS, run_inpaint_bench),
    "translate": (TRANSLATE_DEFAULTS, run_translate_bench),
    "gen-dataset": (GEN_DATASET_DEFAULTS, run_gen_dataset),
    "sample": (SAMPLE_DEFAULTS, run_sample),
}


def _add_common(parser):
    parser.add_argument("--config", default=None, help="key = value file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--workers", type=int, default=1)


def _add_defaults_as_flags(parser, defaults):
    for key, value in defaults.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            parser.add_argument(flag, dest=key, default=None,
                                type=lambda v: v.lower() in ("1", "true"))
        else:
            parser.add_argument(flag, dest=key, default=None, type=type(value))


def _add_single_image_flags(parser, drag: bool, translate: bool):
    parser.add_argument("--image", default=None, help="grid file to edit")
    parser.add_argument("--data", default=None, help="dataset directory")
    parser.add_argument("--mode", choices=("sde", "ode"), default=None)
    parser.add_argument("--steps", type=int, default=None)
    parser.add_argument("--out-file", dest="out_file", default=None)
    if drag:
        parser.add_argument("--points", default=None,
                            help='"ys,xs:yt,xt[;...]"')
        parser.add_argument("--mask", default=None)
        parser.add_argument("--r", type=int, default=None)
        parser.add_argument("--m", default=None, help="auto or an integer")
    elif translate:
        parser.add_argument("--source-label", default=None)
        parser.add_argument("--target-label", default=None)
    else:
        parser.add_argument("--mask", default=None)


#: Bench config keys fed by the shared single-image flags.
_FLAG_TO_KEY = {
    "drag": {"steps": "trajectory_steps", "r": "radius"},
    "translate": {"steps": "trajectory_steps"},
    "inpaint": {},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sdelab",
        description="diffusion sampling/editing experiments with exact scores")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (defaults, _) in _BENCHES.items():
        p = sub.add_parser(name)
        _add_common(p)
        if name in ("drag", "inpaint", "translate"):
            _add_single_image_flags(p, drag=(name == "drag"),
                                    translate=(name == "translate"))
            remapped = set(_FLAG_TO_KEY[name].values())
            bench_only = {k: v for k, v in defaults.items()
                          if k not in remapped}
            _add_defaults_as_flags(p, bench_only)
        else:
            _add_defaults_as_flags(p, defaults)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    name = args.command
    defaults, runner = _BENCHES[name]
    started = time.time()
    os.makedirs(args.out, exist_ok=True)

    if name in ("drag", "inpaint", "translate") and args.image:
        single = {"drag": run_drag_single, "inpaint": run_inpaint_single,
                  "translate": run_translate_single}[name]
        if args.out_file:
            args.out = args.out_file
        else:
            args.out = os.path.join(args.out, f"{name}_out.txt")
        outputs, checks = single(args, os.path.dirname(args.out) or ".",
                                 args.seed)
        print(f"wrote {outputs[0]}")
        return 0

    file_cfg = parse_config_file(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in defaults}
    for flag, key in _FLAG_TO_KEY.get(name, {}).items():
        overrides[key] = getattr(args, flag, None)
    cfg = resolve_config(defaults, file_cfg, overrides)
    outputs, checks = runner(cfg, args.out, args.seed, args.workers)
    manifest = write_manifest(args.out, name, cfg, args.seed, started,
                              outputs, checks or None)
    for key, value in sorted((checks or {}).items()):
        print(f"[{'PASS' if value else 'FAIL'}] {name}:{key}")
    if checks and not manifest["all_passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
