"""Artifact pipelines: PGM encoding, sampling-job determinism, the
end-to-end identity fast path, and the figure-reproduction bundles."""

import os

import numpy as np
import pytest

from freeu_lab.errors import ConfigError
from freeu_lab.freeu import FreeUConfig, FreeUStageConfig
from freeu_lab.pipelines import (SampleJob, encode_pgm, figure_pipelines,
                                 run_sample_job, write_pgm)
from freeu_lab.spectral import SpectrumProfile


def _tree_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            path = os.path.join(dirpath, name)
            with open(path, "rb") as f:
                out[os.path.relpath(path, root)] = f.read()
    return out


# ---------------------------------------------------------------------------
# PGM encoding


def test_encode_pgm_header_and_levels():
    img = np.array([[-1.0, 0.0], [1.0, -1.0]], np.float32)
    blob = encode_pgm(img)
    assert blob.startswith(b"P5\n2 2\n255\n")
    assert list(blob[-4:]) == [0, 128, 255, 0]


def test_encode_pgm_clips_out_of_range():
    blob = encode_pgm(np.array([[-3.0, 3.0]], np.float32))
    assert list(blob[-2:]) == [0, 255]


def test_encode_pgm_rejects_non_2d():
    with pytest.raises(ConfigError):
        encode_pgm(np.zeros((1, 2, 2), np.float32))


def test_write_pgm(tmp_path):
    path = tmp_path / "img.pgm"
    write_pgm(str(path), np.zeros((4, 4), np.float32))
    assert path.read_bytes().startswith(b"P5\n4 4\n255\n")


# ---------------------------------------------------------------------------
# sample jobs


def test_sample_job_round_trip_and_validation():
    job = SampleJob(seed=3, count=2, steps=5,
                    freeu=FreeUConfig(stages=(FreeUStageConfig(l=1, b=1.3),)))
    assert SampleJob.from_dict(job.to_dict()) == job
    with pytest.raises(ConfigError):
        SampleJob.from_dict({"seed": 1, "step": 5})


def test_identity_compare_job_is_byte_identical(tiny_ckpt, tmp_path):
    job = SampleJob(seed=11, count=2, steps=5, compare=True,
                    freeu=FreeUConfig(stages=(
                        FreeUStageConfig(l=1, b=1.0, s=1.0, r_thresh=2.0),
                        FreeUStageConfig(l=2, b=1.0, s=1.0, r_thresh=4.0))))
    run_sample_job(tiny_ckpt, job, str(tmp_path))
    base = _tree_bytes(str(tmp_path / "baseline"))
    freeu = _tree_bytes(str(tmp_path / "freeu"))
    assert base.keys() == freeu.keys() and len(base) > 0
    for name in base:
        assert base[name] == freeu[name], f"artifact {name} differs"


def test_non_identity_compare_job_differs(tiny_ckpt, tmp_path):
    job = SampleJob(seed=11, steps=5, compare=True,
                    freeu=FreeUConfig(stages=(
                        FreeUStageConfig(l=1, b=1.4, s=0.8, r_thresh=2.0),)))
    run_sample_job(tiny_ckpt, job, str(tmp_path))
    base = (tmp_path / "baseline" / "sample_000.pgm").read_bytes()
    freeu = (tmp_path / "freeu" / "sample_000.pgm").read_bytes()
    assert base != freeu


def test_same_job_twice_is_byte_identical(tiny_ckpt, tmp_path):
    job = SampleJob(seed=4, count=1, steps=5, record_trajectory=True)
    run_sample_job(tiny_ckpt, job, str(tmp_path / "a"))
    run_sample_job(tiny_ckpt, job, str(tmp_path / "b"))
    a, b = _tree_bytes(str(tmp_path / "a")), _tree_bytes(str(tmp_path / "b"))
    assert a == b and len(a) > 0


def test_trajectory_artifacts(tiny_ckpt, tmp_path):
    from freeu_lab.checkpoint import load
    from freeu_lab.diffusion import TrajectoryRecord

    job = SampleJob(seed=4, steps=6, record_trajectory=True)
    run_sample_job(tiny_ckpt, job, str(tmp_path))
    tensors, meta = load(str(tmp_path / "trajectory.ckpt"))
    assert meta["kind"] == "trajectory"
    rec = TrajectoryRecord.from_tensors(tensors)
    assert rec.steps == [6, 5, 4, 3, 2, 1]
    band_csv = (tmp_path / "band_stats.csv").read_text()
    assert band_csv.splitlines()[0] == "step,low_amp,high_amp,low_delta,high_delta"
    assert len(band_csv.strip().splitlines()) == 7
    prof = SpectrumProfile.from_csv((tmp_path / "spectrum_000.csv").read_text())
    assert prof.bands == 8


def test_missing_checkpoint_rejected(tmp_path):
    with pytest.raises(ConfigError):
        run_sample_job(str(tmp_path / "missing.ckpt"), SampleJob(seed=0), str(tmp_path))


# ---------------------------------------------------------------------------
# figure pipelines


def test_fig5_degenerate_sweep_profiles_identical(tiny_ckpt, tmp_path):
    edges, profiles = figure_pipelines("fig5", tiny_ckpt, str(tmp_path),
                                       b_values=(1.0, 1.0, 1.0), seeds=2)
    lines = (tmp_path / "fig5_profiles.csv").read_text().splitlines()
    assert lines[0] == "band_lo,band_hi,b_1,b_1,b_1"
    for line in lines[1:]:
        cells = line.split(",")
        assert cells[2] == cells[3] == cells[4]


def test_fig6_three_profiles_shared_edges(tiny_ckpt, tmp_path):
    edges, means = figure_pipelines("fig6", tiny_ckpt, str(tmp_path),
                                    seeds=2, step_stride=4)
    assert set(means) == {"backbone", "skip", "fused"}
    assert all(v.shape == (8,) for v in means.values())
    lines = (tmp_path / "fig6_profiles.csv").read_text().splitlines()
    assert lines[0] == "band_lo,band_hi,backbone,skip,fused"
    assert len(lines) == 9


def test_fig2_writes_decomposition(tiny_ckpt, tmp_path):
    stats = figure_pipelines("fig2", tiny_ckpt, str(tmp_path), seeds=2)
    for name in ("fig2_band_stats.csv", "fig2_final.pgm",
                 "fig2_final_low.pgm", "fig2_final_high.pgm"):
        assert (tmp_path / name).exists()
    assert len(stats.steps) == 10  # tiny schedule has T=10


def test_fig13_paired_stats(tiny_ckpt, tmp_path):
    sb, sf = figure_pipelines("fig13", tiny_ckpt, str(tmp_path), seeds=2)
    assert list(sb.steps) == list(sf.steps)
    lines = (tmp_path / "fig13_band_stats.csv").read_text().splitlines()
    assert lines[0] == "step,baseline_low,baseline_high,freeu_low,freeu_high"
    assert len(lines) == 11


def test_unknown_figure_rejected(tiny_ckpt, tmp_path):
    with pytest.raises(ConfigError):
        figure_pipelines("fig99", tiny_ckpt, str(tmp_path))
