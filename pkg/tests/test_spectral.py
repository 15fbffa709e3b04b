"""Spectral toolkit tests: the radix-2 FFT against the brute-force DFT
oracle, radial-profile semantics, low/high decomposition, and the
trajectory band statistics."""

import io

import numpy as np
import pytest

from freeu_lab.diffusion import TrajectoryRecord
from freeu_lab.errors import ShapeError
from freeu_lab.rng import SeededRng
from freeu_lab.spectral import (BandStats, ComplexGrid, SpectrumProfile,
                                band_amplitudes, feature_spectrum, fft2, ifft2,
                                radius_grid, relative_log_amplitude,
                                split_low_high, trajectory_band_stats)

from reference import dft2_naive


def test_fft2_impulse_is_flat():
    field = np.zeros((8, 8), np.float32)
    field[0, 0] = 1.0
    spec = fft2(field).grid
    np.testing.assert_allclose(spec.real, np.ones((8, 8)), atol=1e-6)
    np.testing.assert_allclose(spec.imag, np.zeros((8, 8)), atol=1e-6)


def test_fft2_constant_is_dc_only():
    c = 2.5
    spec = fft2(np.full((16, 16), c, np.float32)).grid
    assert abs(spec[0, 0] - c * 256) <= 1e-3
    off_dc = spec.copy()
    off_dc[0, 0] = 0
    assert np.abs(off_dc).max() <= 1e-4


def test_fft2_matches_brute_force_dft():
    rng = SeededRng(77)
    for _ in range(3):
        field = rng.normals((16, 16), dtype=np.float64)
        got = fft2(field).grid.astype(np.complex128)
        want = dft2_naive(field)
        assert np.abs(got - want).max() <= 1e-4


def test_ifft2_roundtrip():
    field = SeededRng(5).normals((32, 32))
    back = ifft2(fft2(field)).grid
    assert np.abs(back.real - field).max() <= 1e-5
    assert np.abs(back.imag).max() <= 1e-5


def test_fft2_linearity():
    rng = SeededRng(9)
    x, y = rng.normals((16, 16)), rng.normals((16, 16))
    a, b = 1.7, -0.4
    lhs = fft2(a * x + b * y).grid
    rhs = a * fft2(x).grid + b * fft2(y).grid
    assert np.abs(lhs - rhs).max() <= 1e-5 * max(1.0, np.abs(rhs).max())


def test_parseval():
    x = SeededRng(10).normals((32, 32), dtype=np.float64)
    spec = fft2(x).grid.astype(np.complex128)
    lhs = (x ** 2).sum()
    rhs = (np.abs(spec) ** 2).sum() / x.size
    assert abs(lhs - rhs) / abs(lhs) <= 1e-4


def test_fft2_rejects_non_power_of_two():
    with pytest.raises(ShapeError):
        fft2(np.zeros((6, 8), np.float32))
    with pytest.raises(ShapeError):
        fft2(np.zeros((8,), np.float32))


def test_complex_grid_interleaved_layout():
    g = ComplexGrid(np.array([[1 + 2j, 3 + 4j]], np.complex64))
    np.testing.assert_array_equal(g.interleaved, np.array([1, 2, 3, 4], np.float32))
    assert g.interleaved.size == 2 * g.H * g.W


# ---------------------------------------------------------------------------
# relative log amplitude


def test_profile_impulse_is_zero():
    field = np.zeros((32, 32), np.float32)
    field[0, 0] = 1.0
    prof = relative_log_amplitude(field, 8)
    assert np.abs(prof.rel_log_amp).max() <= 1e-6
    assert prof.band_edges[0] == 0.0 and len(prof.band_edges) == 9


def test_profile_constant_is_strongly_negative():
    prof = relative_log_amplitude(np.full((32, 32), 1.5, np.float32), 8)
    assert (prof.rel_log_amp[1:] < -10).all()


def test_profile_white_noise_is_flat_in_expectation():
    rng = SeededRng(123)
    acc = np.zeros(8)
    for _ in range(100):
        acc += relative_log_amplitude(rng.normals((32, 32)), 8).rel_log_amp
    mean_prof = acc / 100
    assert mean_prof.max() - mean_prof.min() <= 0.2


def test_profile_scale_invariance():
    x = SeededRng(3).normals((32, 32))
    a = relative_log_amplitude(x, 8).rel_log_amp
    b = relative_log_amplitude(np.float32(37.0) * x, 8).rel_log_amp
    assert np.abs(a - b).max() <= 1e-6


def test_profile_csv_round_trip():
    prof = relative_log_amplitude(SeededRng(4).normals((16, 16)), 6)
    text = prof.to_csv()
    assert text.splitlines()[0] == "band_lo,band_hi,rel_log_amp"
    back = SpectrumProfile.from_csv(text)
    np.testing.assert_allclose(back.band_edges, prof.band_edges, rtol=1e-8)
    np.testing.assert_allclose(back.rel_log_amp, prof.rel_log_amp, rtol=1e-8)


def test_profile_validation():
    with pytest.raises(ShapeError):
        SpectrumProfile(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    with pytest.raises(ShapeError):
        SpectrumProfile(np.array([0.0, 1.0, 0.5]), np.array([0.0, 1.0]))
    with pytest.raises(ValueError):
        relative_log_amplitude(np.zeros((8, 8)), bands=1)


# ---------------------------------------------------------------------------
# split_low_high


def test_split_all_pass():
    img = SeededRng(6).normals((16, 16))
    max_r = radius_grid(16, 16).max()
    low, high = split_low_high(img, max_r + 1.0)
    assert np.abs(low - img).max() <= 1e-5
    assert np.abs(high).max() <= 1e-5


def test_split_no_pass():
    img = SeededRng(7).normals((16, 16))
    low, high = split_low_high(img, 0.0)
    assert np.abs(low).max() <= 1e-5
    assert np.abs(high - img).max() <= 1e-5


def test_split_partition_and_linearity():
    rng = SeededRng(8)
    a, b = rng.normals((32, 32)), rng.normals((32, 32))
    la, ha = split_low_high(a, 4.0)
    lb, hb = split_low_high(b, 4.0)
    lab, hab = split_low_high(a + b, 4.0)
    assert np.abs(la + ha - a).max() <= 1e-5
    assert np.abs(lab - (la + lb)).max() <= 1e-5
    assert np.abs(hab - (ha + hb)).max() <= 1e-5


def test_split_energy_partition():
    img = SeededRng(9).normals((32, 32))
    low, high = split_low_high(img, 5.0)
    e = (img.astype(np.float64) ** 2).sum()
    el = (low.astype(np.float64) ** 2).sum()
    eh = (high.astype(np.float64) ** 2).sum()
    assert abs(el + eh - e) / e <= 1e-3


# ---------------------------------------------------------------------------
# trajectory band stats


def _record(frames):
    rec = TrajectoryRecord()
    t = len(frames)
    for f in frames:
        rec.append(t, f, f)
        t -= 1
    return rec


def test_constant_trajectory_has_zero_deltas():
    frame = np.full((1, 1, 16, 16), 0.5, np.float32)
    stats = trajectory_band_stats(_record([frame] * 5), 4.0)
    assert (stats.low_delta == 0).all() and (stats.high_delta == 0).all()
    assert list(stats.steps) == [5, 4, 3, 2, 1]


def test_single_step_record():
    stats = trajectory_band_stats(_record([np.ones((1, 1, 8, 8), np.float32)]), 2.0)
    assert len(stats.steps) == 1
    assert stats.low_delta[0] == 0 and stats.high_delta[0] == 0


def test_iid_noise_low_band_deltas_are_noisier():
    # For i.i.d. frames every spectrum cell has the same amplitude scale, so
    # the band with fewer cells (low band when r_cut puts <50% of cells
    # inside) has the noisier mean and hence the larger step-to-step deltas.
    # Verified against an independent Monte Carlo oracle.
    rng = SeededRng(11)
    frames = [rng.normals((1, 1, 32, 32)) for _ in range(40)]
    stats = trajectory_band_stats(_record(frames), 4.0)
    assert stats.low_delta[1:].mean() > stats.high_delta[1:].mean()


def test_band_stats_csv():
    stats = BandStats(np.array([2, 1]), np.array([1.0, 2.0]), np.array([3.0, 4.0]),
                      np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    lines = stats.to_csv().splitlines()
    assert lines[0] == "step,low_amp,high_amp,low_delta,high_delta"
    assert lines[1] == "2,1,3,0,0"


def test_empty_record_rejected():
    with pytest.raises(ValueError):
        trajectory_band_stats(TrajectoryRecord(), 4.0)


def test_band_amplitudes_against_direct_computation():
    img = SeededRng(12).normals((16, 16), dtype=np.float64)
    low, high = band_amplitudes(img, 3.0)
    mag = np.abs(np.fft.fftshift(dft2_naive(img)))
    sel = radius_grid(16, 16) < 3.0
    assert abs(low - mag[sel].mean()) <= 1e-6
    assert abs(high - mag[~sel].mean()) <= 1e-6


# ---------------------------------------------------------------------------
# feature_spectrum


def test_feature_spectrum_impulse_profile():
    feats = np.zeros((2, 3, 16, 16), np.float32)
    feats[:, :, 0, 0] = 1.0
    prof = feature_spectrum(feats, 8)
    assert np.abs(prof.rel_log_amp).max() <= 1e-6


def test_feature_spectrum_single_channel_matches_image_profile():
    img = SeededRng(13).normals((16, 16))
    prof_feat = feature_spectrum(img.reshape(1, 1, 16, 16), 8)
    prof_img = relative_log_amplitude(img, 8)
    np.testing.assert_allclose(prof_feat.rel_log_amp, prof_img.rel_log_amp, atol=1e-12)


def test_feature_spectrum_matches_looped_computation():
    feats = SeededRng(14).normals((2, 4, 16, 16))
    prof = feature_spectrum(feats, 8)
    loops = []
    for n in range(2):
        for c in range(4):
            loops.append(relative_log_amplitude(feats[n, c], 8).rel_log_amp)
    np.testing.assert_allclose(prof.rel_log_amp, np.mean(loops, axis=0), atol=1e-6)
