"""2D FFT kernels and radial-spectrum measurement instruments.

The transform is a from-scratch iterative radix-2 Cooley-Tukey, restricted
to power-of-two extents (the toy shapes).  The tests keep an O(N^4)
brute-force DFT as the independent oracle.  Transforms run internally in
complex128 and results are stored as 32-bit grids, so roundtrip residues
stay far below the published tolerances.

Conventions: forward transform is unnormalized; the inverse carries the
1/(H*W) factor.  "Centered" means the zero frequency sits at (H//2, W//2).
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericError, ShapeError

LOG_EPS = 1e-8


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def _bit_reverse_indices(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def _fft1d_last(a, inverse):
    """Radix-2 Cooley-Tukey along the last axis of a complex128 array."""
    n = a.shape[-1]
    if n == 1:
        return a.copy()
    a = a[..., _bit_reverse_indices(n)].astype(np.complex128, copy=True)
    sign = 2j if inverse else -2j
    m = 2
    while m <= n:
        half = m // 2
        w = np.exp(sign * np.pi * np.arange(half) / m)
        blk = a.reshape(a.shape[:-1] + (n // m, m))
        even = blk[..., :half].copy()  # copy: the in-place write below aliases
        odd = blk[..., half:] * w
        blk[..., :half] = even + odd
        blk[..., half:] = even - odd
        m *= 2
    return a


def _fft2_raw(a, inverse=False):
    """Batched 2D transform over the trailing two axes (complex128 in/out)."""
    h, w = a.shape[-2:]
    if not (_is_pow2(h) and _is_pow2(w)):
        raise ShapeError(f"fft2 requires power-of-two extents, got {(h, w)}")
    out = _fft1d_last(np.asarray(a, dtype=np.complex128), inverse)
    out = _fft1d_last(out.swapaxes(-1, -2), inverse).swapaxes(-1, -2)
    if inverse:
        out /= h * w
    return out


def _shift2(a):
    """Move the zero frequency of the trailing two axes to the center."""
    h, w = a.shape[-2:]
    return np.roll(a, (h // 2, w // 2), axis=(-2, -1))


def _unshift2(a):
    h, w = a.shape[-2:]
    return np.roll(a, (-(h // 2), -(w // 2)), axis=(-2, -1))


def radius_grid(h, w, centered=True):
    """Euclidean distance in cells from the (centered) zero frequency."""
    cy, cx = h // 2, w // 2
    yy = np.arange(h, dtype=np.float64) - cy
    xx = np.arange(w, dtype=np.float64) - cx
    rr = np.sqrt(yy[:, None] ** 2 + xx[None, :] ** 2)
    return rr if centered else _unshift2(rr)


def symmetrize_mask(mask_centered):
    """Average a centered mask with its conjugate-mirror so real fields stay
    real after masking.  A radial mask is already symmetric; this guards the
    aliased Nyquist rows on even grids."""
    m = _unshift2(np.asarray(mask_centered, dtype=np.float64))
    mirrored = m[(-np.arange(m.shape[0])) % m.shape[0]][:, (-np.arange(m.shape[1])) % m.shape[1]]
    return _shift2(0.5 * (m + mirrored))


@dataclass
class ComplexGrid:
    """H x W complex spectrum stored as 32-bit components."""

    grid: np.ndarray  # complex64, shape (H, W)

    def __post_init__(self):
        self.grid = np.ascontiguousarray(self.grid, dtype=np.complex64)
        if self.grid.ndim != 2:
            raise ShapeError(f"ComplexGrid must be 2-d, got shape {self.grid.shape}")

    @property
    def H(self):
        return self.grid.shape[0]

    @property
    def W(self):
        return self.grid.shape[1]

    @property
    def interleaved(self):
        """Flat (re, im) pairs, row-major: length 2*H*W float32."""
        return self.grid.view(np.float32).reshape(-1)


def fft2(field):
    """Unnormalized forward 2D FFT of a real or complex H x W field."""
    field = np.asarray(field)
    if field.ndim != 2:
        raise ShapeError(f"fft2 expects a 2-d field, got shape {field.shape}")
    return ComplexGrid(_fft2_raw(field))


def ifft2(spectrum):
    """Inverse 2D FFT (carries the 1/(H*W) normalization)."""
    grid = spectrum.grid if isinstance(spectrum, ComplexGrid) else np.asarray(spectrum)
    if grid.ndim != 2:
        raise ShapeError(f"ifft2 expects a 2-d grid, got shape {grid.shape}")
    return ComplexGrid(_fft2_raw(grid, inverse=True))


@dataclass
class SpectrumProfile:
    """Radial-band mean log |F| relative to the DC coefficient."""

    band_edges: np.ndarray  # (K+1,) ascending, starting at 0
    rel_log_amp: np.ndarray  # (K,)

    def __post_init__(self):
        self.band_edges = np.asarray(self.band_edges, dtype=np.float64)
        self.rel_log_amp = np.asarray(self.rel_log_amp, dtype=np.float64)
        if self.band_edges.ndim != 1 or self.rel_log_amp.ndim != 1:
            raise ShapeError("SpectrumProfile fields must be 1-d")
        if len(self.band_edges) != len(self.rel_log_amp) + 1:
            raise ShapeError("band_edges must have one more entry than rel_log_amp")
        if np.any(np.diff(self.band_edges) <= 0):
            raise ShapeError("band_edges must be strictly ascending")

    @property
    def bands(self):
        return len(self.rel_log_amp)

    def to_csv(self):
        lines = ["band_lo,band_hi,rel_log_amp"]
        for k in range(self.bands):
            lines.append(
                f"{self.band_edges[k]:.9g},{self.band_edges[k + 1]:.9g},"
                f"{self.rel_log_amp[k]:.9g}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text):
        rows = [line for line in text.strip().splitlines()][1:]
        lo, hi, amp = [], [], []
        for row in rows:
            a, b, c = row.split(",")
            lo.append(float(a))
            hi.append(float(b))
            amp.append(float(c))
        return cls(np.array(lo + [hi[-1]]), np.array(amp))


def _band_index(h, w, bands):
    rr = radius_grid(h, w)
    max_r = rr.max()
    idx = np.minimum((rr / max_r * bands).astype(np.int64), bands - 1)
    edges = np.linspace(0.0, max_r, bands + 1)
    return idx, edges


def relative_log_amplitude(field, bands=8):
    """Band-averaged log Fourier magnitude referenced to DC."""
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ShapeError(f"relative_log_amplitude expects 2-d field, got {field.shape}")
    if bands < 2:
        raise ValueError("bands must be >= 2")
    h, w = field.shape
    mag = np.abs(_shift2(_fft2_raw(field)))
    idx, edges = _band_index(h, w, bands)
    sums = np.bincount(idx.ravel(), weights=mag.ravel(), minlength=bands)
    counts = np.bincount(idx.ravel(), minlength=bands)
    means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    dc = mag[h // 2, w // 2]
    prof = np.log(means + LOG_EPS) - np.log(dc + LOG_EPS)
    return SpectrumProfile(edges, prof)


def split_low_high(image, r_cut):
    """Partition an image into its below/above-threshold radial components."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ShapeError(f"split_low_high expects a 2-d image, got {image.shape}")
    h, w = image.shape
    rr = radius_grid(h, w)
    mask = symmetrize_mask((rr < r_cut).astype(np.float64))
    mask_u = _unshift2(mask)
    spec = _fft2_raw(image)
    low_c = _fft2_raw(spec * mask_u, inverse=True)
    high_c = _fft2_raw(spec * (1.0 - mask_u), inverse=True)
    residue = max(np.abs(low_c.imag).max(), np.abs(high_c.imag).max())
    if residue > 1e-3:
        raise NumericError(f"split_low_high imaginary residue {residue:.3e} exceeds 1e-3")
    return low_c.real.astype(np.float32), high_c.real.astype(np.float32)


@dataclass
class BandStats:
    """Per-step low/high radial-band mean |F| and step-to-step deltas."""

    steps: np.ndarray
    low_amp: np.ndarray
    high_amp: np.ndarray
    low_delta: np.ndarray
    high_delta: np.ndarray

    def to_csv(self):
        lines = ["step,low_amp,high_amp,low_delta,high_delta"]
        for i in range(len(self.steps)):
            lines.append(
                f"{int(self.steps[i])},{self.low_amp[i]:.9g},{self.high_amp[i]:.9g},"
                f"{self.low_delta[i]:.9g},{self.high_delta[i]:.9g}"
            )
        return "\n".join(lines) + "\n"


def band_amplitudes(field, r_cut):
    """(low, high) mean |F| of a single 2-d field, split at radius r_cut."""
    field = np.asarray(field, dtype=np.float64)
    h, w = field.shape
    mag = np.abs(_shift2(_fft2_raw(field)))
    low_sel = radius_grid(h, w) < r_cut
    low = mag[low_sel].mean() if low_sel.any() else 0.0
    high = mag[~low_sel].mean() if (~low_sel).any() else 0.0
    return low, high


def trajectory_band_stats(record, r_cut):
    """Low/high band amplitude of the evolving x_t, per sampling step.

    Batched records are averaged over the batch.  Deltas are absolute
    step-to-step changes; the first entry is 0.
    """
    if not record.steps:
        raise ValueError("trajectory record is empty")
    steps = np.asarray(record.steps)
    low = np.zeros(len(steps))
    high = np.zeros(len(steps))
    for i, xt in enumerate(record.x_t):
        frames = xt[:, 0] if xt.ndim == 4 else xt[None]
        pairs = [band_amplitudes(f, r_cut) for f in frames]
        low[i] = np.mean([p[0] for p in pairs])
        high[i] = np.mean([p[1] for p in pairs])
    low_d = np.zeros_like(low)
    high_d = np.zeros_like(high)
    low_d[1:] = np.abs(np.diff(low))
    high_d[1:] = np.abs(np.diff(high))
    return BandStats(steps, low, high, low_d, high_d)


def feature_spectrum(features, bands=8):
    """Profile of an NCHW feature stack: per-channel profiles averaged over
    channels and batch."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 4:
        raise ShapeError(f"feature_spectrum expects NCHW, got shape {features.shape}")
    n, c, h, w = features.shape
    mag = np.abs(_shift2(_fft2_raw(features.reshape(n * c, h, w))))
    idx, edges = _band_index(h, w, bands)
    k = bands
    flat_idx = idx.ravel()
    profs = np.zeros((n * c, k))
    counts = np.bincount(flat_idx, minlength=k)
    for j in range(n * c):
        sums = np.bincount(flat_idx, weights=mag[j].ravel(), minlength=k)
        means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
        dc = mag[j, h // 2, w // 2]
        profs[j] = np.log(means + LOG_EPS) - np.log(dc + LOG_EPS)
    return SpectrumProfile(edges, profs.mean(axis=0))
