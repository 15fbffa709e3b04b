"""Independent float64 reference implementations used as test oracles.

Nothing here shares code with the package's compute paths: convolution is
done by explicit loops (or a sliding-window einsum for the larger nets),
the DFT is the quadratic brute-force sum, and the network forward mirrors
the architecture with plain float64 numpy.  Finite differences taken on
these references are accurate to ~1e-6 relative, far below the 1e-3
tolerances the float32 engine is held to.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from freeu_lab.unet import sinusoidal_embedding


# ---------------------------------------------------------------------------
# brute-force kernels


def conv2d_loops(x, w, b=None, stride=1, padding=0):
    """Direct 6-loop cross-correlation (float64)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    n, c_in, h, wd = x.shape
    c_out, _, k, _ = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    ho = (h + 2 * padding - k) // stride + 1
    wo = (wd + 2 * padding - k) // stride + 1
    out = np.zeros((n, c_out, ho, wo))
    for ni in range(n):
        for oi in range(c_out):
            for ci in range(c_in):
                for yi in range(ho):
                    for xi in range(wo):
                        for u in range(k):
                            for v in range(k):
                                out[ni, oi, yi, xi] += (
                                    xp[ni, ci, yi * stride + u, xi * stride + v]
                                    * w[oi, ci, u, v]
                                )
    if b is not None:
        out += np.asarray(b, dtype=np.float64).reshape(1, c_out, 1, 1)
    return out


def conv2d_ref(x, w, b=None, padding=0):
    """Sliding-window einsum cross-correlation (float64, stride 1)."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    k = w.shape[-1]
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    out = np.einsum("nchwuv,ocuv->nohw", win, w)
    if b is not None:
        out = out + np.asarray(b, dtype=np.float64).reshape(1, -1, 1, 1)
    return out


def dft2_naive(field):
    """O(N^4) brute-force 2D DFT (unnormalized forward)."""
    field = np.asarray(field, dtype=np.complex128)
    h, w = field.shape
    out = np.zeros((h, w), dtype=np.complex128)
    yy, xx = np.mgrid[0:h, 0:w]
    for u in range(h):
        for v in range(w):
            phase = np.exp(-2j * np.pi * (u * yy / h + v * xx / w))
            out[u, v] = (field * phase).sum()
    return out


# ---------------------------------------------------------------------------
# float64 network building blocks


def silu_ref(x):
    x = np.asarray(x, dtype=np.float64)
    return x / (1.0 + np.exp(-x))


def group_norm_ref(x, groups, gamma, beta, eps=1e-5):
    x = np.asarray(x, dtype=np.float64)
    n, c, h, w = x.shape
    m = (c // groups) * h * w
    xg = x.reshape(n, groups, m)
    mu = xg.mean(axis=2, keepdims=True)
    var = xg.var(axis=2, keepdims=True)
    xhat = ((xg - mu) / np.sqrt(var + eps)).reshape(n, c, h, w)
    gamma = np.asarray(gamma, dtype=np.float64).reshape(1, c, 1, 1)
    beta = np.asarray(beta, dtype=np.float64).reshape(1, c, 1, 1)
    return xhat * gamma + beta


def down2_avg_ref(x):
    n, c, h, w = x.shape
    return x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))


def up2_nearest_ref(x):
    return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)


def linear_ref(x, w, b):
    return np.asarray(x, np.float64) @ np.asarray(w, np.float64) + np.asarray(b, np.float64)


# ---------------------------------------------------------------------------
# full-network reference forward (mirrors UNetModel.forward in float64)


def _resblock_ref(w, name, x, temb, groups):
    h = conv2d_ref(
        silu_ref(group_norm_ref(x, groups, w[f"{name}.norm1.gamma"], w[f"{name}.norm1.beta"])),
        w[f"{name}.conv1.w"], w[f"{name}.conv1.b"], padding=1,
    )
    proj = linear_ref(silu_ref(temb), w[f"{name}.temb.w"], w[f"{name}.temb.b"])
    h = h + proj[:, :, None, None]
    h = conv2d_ref(
        silu_ref(group_norm_ref(h, groups, w[f"{name}.norm2.gamma"], w[f"{name}.norm2.beta"])),
        w[f"{name}.conv2.w"], w[f"{name}.conv2.b"], padding=1,
    )
    return x + h


def unet_forward_ref(config, weights, x, t):
    """float64 mirror of the package's noise-predictor forward pass."""
    w = {k: np.asarray(v, dtype=np.float64) for k, v in weights.items()}
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    widths = config.widths
    levels = len(widths)
    g = config.groups

    t_arr = np.broadcast_to(np.atleast_1d(np.asarray(t)), (n,))
    temb = sinusoidal_embedding(t_arr, config.time_embed_dim).astype(np.float64)
    temb = linear_ref(temb, w["time_mlp.fc1.w"], w["time_mlp.fc1.b"])
    temb = linear_ref(silu_ref(temb), w["time_mlp.fc2.w"], w["time_mlp.fc2.b"])

    h = conv2d_ref(x, w["conv_in.w"], w["conv_in.b"], padding=1)
    skips = []
    for i in range(levels):
        h = _resblock_ref(w, f"enc{i}.block", h, temb, g)
        skips.append(h)
        if i + 1 < levels:
            h = conv2d_ref(down2_avg_ref(h), w[f"down{i}.conv.w"], w[f"down{i}.conv.b"],
                           padding=1)
    h = _resblock_ref(w, "mid.block", h, temb, g)

    for l in range(1, levels + 1):
        skip = skips.pop()
        fused = np.concatenate([h, skip], axis=1)
        h = conv2d_ref(fused, w[f"dec{l}.reduce.w"], w[f"dec{l}.reduce.b"], padding=1)
        h = _resblock_ref(w, f"dec{l}.block", h, temb, g)
        if l < levels:
            h = conv2d_ref(up2_nearest_ref(h), w[f"dec{l}.up_conv.w"],
                           w[f"dec{l}.up_conv.b"], padding=1)

    h = silu_ref(group_norm_ref(h, g, w["norm_out.gamma"], w["norm_out.beta"]))
    return conv2d_ref(h, w["conv_out.w"], w["conv_out.b"], padding=1)


# ---------------------------------------------------------------------------
# finite differences


def central_fd(f, arr, idx, h=1e-3):
    """Central finite difference of scalar f() w.r.t. arr[idx] (in place)."""
    orig = arr[idx]
    arr[idx] = orig + h
    fp = f()
    arr[idx] = orig - h
    fm = f()
    arr[idx] = orig
    return (fp - fm) / (2.0 * h)


def assert_grad_close(analytic, numeric, rel_tol=1e-3, grad_floor=1e-4):
    """Spec tolerance: relative error <= rel_tol wherever |grad| > grad_floor."""
    analytic = float(analytic)
    numeric = float(numeric)
    if max(abs(analytic), abs(numeric)) <= grad_floor:
        return
    rel = abs(analytic - numeric) / max(abs(numeric), grad_floor)
    assert rel <= rel_tol, f"grad mismatch: analytic={analytic} fd={numeric} rel={rel:.2e}"
