"""Synthetic grayscale dataset: smooth filled shapes (global structure)
overlaid with a sinusoidal grating or checkerboard patch (fine texture).

Values live in [-1, 1]; every image is fully determined by (seed, index).
"""

import numpy as np

from .errors import ConfigError
from .rng import derive


def _is_pow2(n):
    return n >= 1 and (n & (n - 1)) == 0


def _draw_shape(img, r, size):
    kind = "ellipse" if r.uniforms(1)[0] < 0.5 else "rect"
    u = r.uniforms(7)
    cy, cx = u[0] * size, u[1] * size
    ry = (0.12 + 0.28 * u[2]) * size
    rx = (0.12 + 0.28 * u[3]) * size
    fill = np.float32(-1.0 + 2.0 * u[4])
    yy, xx = np.mgrid[0:size, 0:size]
    if kind == "ellipse":
        mask = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    else:
        mask = (np.abs(yy - cy) <= ry) & (np.abs(xx - cx) <= rx)
    img[mask] = fill


def _overlay_texture(img, r, size):
    u = r.uniforms(8)
    amp = np.float32(0.25 + 0.35 * u[0])
    # texture patch covers a random half-to-full sub-window
    h0 = int(u[1] * size * 0.5)
    w0 = int(u[2] * size * 0.5)
    h1 = h0 + int(size * (0.5 + 0.5 * u[3]))
    w1 = w0 + int(size * (0.5 + 0.5 * u[4]))
    h1, w1 = min(h1, size), min(w1, size)
    yy, xx = np.mgrid[h0:h1, w0:w1]
    if u[5] < 0.5:
        # oriented grating with 4..8 cycles across the image
        cycles = 4.0 + 4.0 * u[6]
        theta = np.pi * u[7]
        phase = 2.0 * np.pi * cycles * (
            (np.cos(theta) * xx + np.sin(theta) * yy) / size
        )
        tex = amp * np.sin(phase)
    else:
        cell = 1 + int(u[6] * 2)  # 1 or 2 pixel cells
        tex = amp * (1.0 - 2.0 * (((yy // cell) + (xx // cell)) % 2))
    img[h0:h1, w0:w1] += tex.astype(np.float32)


def synth_dataset(kind, n, size, seed):
    """n grayscale images of shape (n, 1, size, size), float32 in [-1, 1]."""
    if kind != "shapes_texture":
        raise ConfigError(f"unknown dataset kind {kind!r}")
    if not _is_pow2(size):
        raise ConfigError(f"dataset size must be a power of two, got {size}")
    data = np.zeros((n, 1, size, size), dtype=np.float32)
    for i in range(n):
        r = derive(seed, "img", i)
        img = np.full((size, size), np.float32(-1.0 + 0.8 * r.uniforms(1)[0]))
        n_shapes = int(r.stream("nshapes").integers(1, 4))
        for j in range(n_shapes):
            _draw_shape(img, r.stream(f"shape{j}"), size)
        _overlay_texture(img, r.stream("texture"), size)
        data[i, 0] = np.clip(img, -1.0, 1.0)
    return data
