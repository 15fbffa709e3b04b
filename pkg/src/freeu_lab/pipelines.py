"""Sampling jobs and figure-reproduction pipelines.

Every artifact (PGM image, CSV table, tensor container) is a pure function
of (checkpoint, job config, seed), so reruns are byte-identical.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import checkpoint as ckpt
from .diffusion import sample
from .errors import ConfigError
from .freeu import FreeUConfig, FreeUStageConfig, default_config
from .spectral import feature_spectrum, relative_log_amplitude, split_low_high, \
    trajectory_band_stats, SpectrumProfile
from .training import load_model_checkpoint, schedule_from_config


def _fmt(v):
    return f"{v:.9g}"


def encode_pgm(img):
    """8-bit binary PGM of a 2-d field, linearly mapped from [-1, 1]."""
    img = np.asarray(img, dtype=np.float32)
    if img.ndim != 2:
        raise ConfigError(f"encode_pgm expects a 2-d image, got shape {img.shape}")
    h, w = img.shape
    level = np.clip(np.rint((img + 1.0) * 127.5), 0, 255).astype(np.uint8)
    return f"P5\n{w} {h}\n255\n".encode("ascii") + level.tobytes()


def write_pgm(path, img):
    ckpt.atomic_write_bytes(path, encode_pgm(img))


@dataclass(frozen=True)
class SampleJob:
    """One sampling request: seed + step count + modulation config."""

    seed: int
    count: int = 1
    steps: int = 0  # 0 -> use the training schedule's step count
    freeu: FreeUConfig = field(default_factory=FreeUConfig)
    record_trajectory: bool = False
    compare: bool = False
    r_cut: float = 4.0
    bands: int = 8

    def to_dict(self):
        return {
            "seed": self.seed, "count": self.count, "steps": self.steps,
            "freeu": self.freeu.to_dict(),
            "record_trajectory": self.record_trajectory,
            "compare": self.compare, "r_cut": self.r_cut, "bands": self.bands,
        }

    @classmethod
    def from_dict(cls, d):
        known = {
            "seed", "count", "steps", "freeu", "record_trajectory",
            "compare", "r_cut", "bands",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown sample job keys: {sorted(unknown)}")
        d = dict(d)
        if "freeu" in d:
            d["freeu"] = FreeUConfig.from_dict(d["freeu"])
        return cls(**d)


def _job_schedule(config, job):
    return schedule_from_config(config, steps=job.steps or None)


def _write_images_and_spectra(out_dir, images, bands):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    profiles = []
    for i in range(images.shape[0]):
        img = images[i, 0]
        p = os.path.join(out_dir, f"sample_{i:03d}.pgm")
        write_pgm(p, img)
        paths.append(p)
        prof = relative_log_amplitude(img, bands)
        profiles.append(prof)
        ckpt.atomic_write_text(os.path.join(out_dir, f"spectrum_{i:03d}.csv"), prof.to_csv())
    mean_prof = SpectrumProfile(
        profiles[0].band_edges,
        np.mean([p.rel_log_amp for p in profiles], axis=0),
    )
    ckpt.atomic_write_text(os.path.join(out_dir, "spectrum_mean.csv"), mean_prof.to_csv())
    return paths, mean_prof


def run_sample_job(ckpt_path, job, out_dir):
    """Sample from a checkpoint and write images / spectra / trajectories.

    Compare mode runs baseline and modulated branches from identical noise
    and writes them to baseline/ and freeu/ subdirectories.
    """
    model, config, _, _ = load_model_checkpoint(ckpt_path)
    schedule = _job_schedule(config, job)
    os.makedirs(out_dir, exist_ok=True)
    result = {"out_dir": out_dir}

    variants = [("freeu", job.freeu.modulator())]
    if job.compare:
        variants = [("baseline", None)] + variants

    for name, hooks in variants:
        sub = os.path.join(out_dir, name) if job.compare else out_dir
        images, rec = sample(
            model, schedule, job.seed, hooks=hooks,
            record=job.record_trajectory, count=job.count,
        )
        paths, mean_prof = _write_images_and_spectra(sub, images, job.bands)
        result[name] = {"images": paths, "mean_profile": mean_prof}
        if rec is not None:
            traj_path = os.path.join(sub, "trajectory.ckpt")
            ckpt.save(traj_path, rec.to_tensors(), {"kind": "trajectory"})
            stats = trajectory_band_stats(rec, job.r_cut)
            ckpt.atomic_write_text(os.path.join(sub, "band_stats.csv"), stats.to_csv())
            result[name]["trajectory"] = traj_path
            result[name]["band_stats"] = stats
    return result


# ---------------------------------------------------------------------------
# figure pipelines


def _sweep_config(sites, b=1.0, s=1.0, n_stages=2):
    """Per-stage config covering the n coarsest decoder stages."""
    chosen = sorted(sites, key=lambda st: st.l)[:n_stages]
    # threshold at quarter resolution, matching the tuning defaults
    return FreeUConfig(stages=tuple(
        FreeUStageConfig(l=site.l, b=b, s=s, r_thresh=site.size / 4.0)
        for site in chosen
    ))


def figure_fig2(ckpt_path, out_dir, seeds=16, r_cut=4.0, seed=0):
    """Per-step low/high band statistics of the denoising trajectory, plus
    low/high decompositions of the final image."""
    model, config, _, _ = load_model_checkpoint(ckpt_path)
    schedule = schedule_from_config(config)
    os.makedirs(out_dir, exist_ok=True)
    images, rec = sample(model, schedule, seed, record=True, count=seeds)
    stats = trajectory_band_stats(rec, r_cut)
    ckpt.atomic_write_text(os.path.join(out_dir, "fig2_band_stats.csv"), stats.to_csv())
    low, high = split_low_high(images[0, 0], r_cut)
    write_pgm(os.path.join(out_dir, "fig2_final.pgm"), images[0, 0])
    write_pgm(os.path.join(out_dir, "fig2_final_low.pgm"), low)
    write_pgm(os.path.join(out_dir, "fig2_final_high.pgm"), high)
    return stats


def figure_fig5(ckpt_path, out_dir, b_values=(1.0, 1.2, 1.4), seeds=16,
                bands=8, seed=0):
    """Mean image spectrum profile for a sweep of the backbone factor."""
    model, config, _, _ = load_model_checkpoint(ckpt_path)
    schedule = schedule_from_config(config)
    os.makedirs(out_dir, exist_ok=True)
    profiles = {}
    edges = None
    for b in b_values:
        cfg = _sweep_config(model.stage_sites, b=b, s=1.0)
        images, _ = sample(model, schedule, seed, hooks=cfg.modulator(), count=seeds)
        profs = [relative_log_amplitude(images[i, 0], bands).rel_log_amp
                 for i in range(seeds)]
        prof = relative_log_amplitude(images[0, 0], bands)
        edges = prof.band_edges
        profiles[b] = np.mean(profs, axis=0)
    header = "band_lo,band_hi," + ",".join(f"b_{b:g}" for b in b_values)
    lines = [header]
    for k in range(bands):
        cells = [_fmt(edges[k]), _fmt(edges[k + 1])]
        cells += [_fmt(profiles[b][k]) for b in b_values]
        lines.append(",".join(cells))
    ckpt.atomic_write_text(os.path.join(out_dir, "fig5_profiles.csv"), "\n".join(lines) + "\n")
    return edges, profiles


def figure_fig6(ckpt_path, out_dir, stage=2, seeds=16, bands=8, step_stride=10,
                seed=0):
    """Backbone/skip/fused feature spectra at one decoder stage, averaged over
    sampling steps and a batch of runs."""
    model, config, _, _ = load_model_checkpoint(ckpt_path)
    schedule = schedule_from_config(config)
    os.makedirs(out_dir, exist_ok=True)
    acc = {"backbone": None, "skip": None, "fused": None}
    edges_box = [None]
    calls = [0]

    def tap(l, pre, post, fused):
        if l != stage:
            return
        calls[0] += 1
        if (calls[0] - 1) % step_stride:
            return
        for key, feats in (("backbone", pre.x), ("skip", pre.h), ("fused", fused)):
            prof = feature_spectrum(feats, bands)
            edges_box[0] = prof.band_edges
            if acc[key] is None:
                acc[key] = prof.rel_log_amp.copy()
                acc[key + "_n"] = 1
            else:
                acc[key] += prof.rel_log_amp
                acc[key + "_n"] += 1

    sample(model, schedule, seed, count=seeds, feature_tap=tap)
    means = {k: acc[k] / acc[k + "_n"] for k in ("backbone", "skip", "fused")}
    edges = edges_box[0]
    lines = ["band_lo,band_hi,backbone,skip,fused"]
    for k in range(bands):
        lines.append(",".join([
            _fmt(edges[k]), _fmt(edges[k + 1]),
            _fmt(means["backbone"][k]), _fmt(means["skip"][k]), _fmt(means["fused"][k]),
        ]))
    ckpt.atomic_write_text(os.path.join(out_dir, "fig6_profiles.csv"), "\n".join(lines) + "\n")
    return edges, means


def figure_fig13(ckpt_path, out_dir, seeds=16, r_cut=4.0, seed=0, freeu=None):
    """Per-step low/high band amplitudes of x_t, baseline vs modulated, from
    shared noise."""
    model, config, _, _ = load_model_checkpoint(ckpt_path)
    schedule = schedule_from_config(config)
    os.makedirs(out_dir, exist_ok=True)
    freeu = freeu or default_config(model.stage_sites)
    _, rec_base = sample(model, schedule, seed, record=True, count=seeds)
    _, rec_freeu = sample(model, schedule, seed, hooks=freeu.modulator(),
                          record=True, count=seeds)
    sb = trajectory_band_stats(rec_base, r_cut)
    sf = trajectory_band_stats(rec_freeu, r_cut)
    lines = ["step,baseline_low,baseline_high,freeu_low,freeu_high"]
    for i in range(len(sb.steps)):
        lines.append(",".join([
            str(int(sb.steps[i])),
            _fmt(sb.low_amp[i]), _fmt(sb.high_amp[i]),
            _fmt(sf.low_amp[i]), _fmt(sf.high_amp[i]),
        ]))
    ckpt.atomic_write_text(os.path.join(out_dir, "fig13_band_stats.csv"),
                           "\n".join(lines) + "\n")
    return sb, sf


FIGURES = {
    "fig2": figure_fig2,
    "fig5": figure_fig5,
    "fig6": figure_fig6,
    "fig13": figure_fig13,
}


def figure_pipelines(name, ckpt_path, out_dir, **params):
    if name not in FIGURES:
        raise ConfigError(f"unknown figure pipeline {name!r}; know {sorted(FIGURES)}")
    return FIGURES[name](ckpt_path, out_dir, **params)
