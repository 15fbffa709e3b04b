"""Time-conditional toy U-Net with instrumented decoder concat sites.

Three resolution levels (e.g. 32 -> 16 -> 8) with channel widths
base * (1, 2, 4), one residual block per level and no attention.  The
encoder pushes a skip feature at every level; each decoder stage pops the
matching skip, hands the (backbone, skip) pair to an optional modulator
callback, concatenates backbone-first and reduces channels with a 3x3 conv.

Stage numbering starts at l=1 for the coarsest decoder stage.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, ShapeError


@dataclass(frozen=True)
class UNetConfig:
    in_channels: int = 1
    base_channels: int = 32
    channel_mults: tuple = (1, 2, 4)
    time_embed_dim: int = 64
    groups: int = 8
    image_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, "channel_mults", tuple(self.channel_mults))
        if len(self.channel_mults) < 2:
            raise ConfigError("need at least 2 resolution levels (>= 2 decoder stages)")
        for m in self.channel_mults:
            if (self.base_channels * m) % self.groups:
                raise ConfigError(
                    f"channel width {self.base_channels * m} not divisible by "
                    f"{self.groups} norm groups"
                )
        levels = len(self.channel_mults)
        if self.image_size % (1 << (levels - 1)):
            raise ConfigError(
                f"image size {self.image_size} not divisible by 2^{levels - 1}"
            )

    @property
    def widths(self):
        return tuple(self.base_channels * m for m in self.channel_mults)

    def to_dict(self):
        return {
            "in_channels": self.in_channels,
            "base_channels": self.base_channels,
            "channel_mults": list(self.channel_mults),
            "time_embed_dim": self.time_embed_dim,
            "groups": self.groups,
            "image_size": self.image_size,
        }

    @classmethod
    def from_dict(cls, d):
        known = {
            "in_channels", "base_channels", "channel_mults",
            "time_embed_dim", "groups", "image_size",
        }
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown unet config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class StageSite:
    """Descriptor of one decoder concat site."""

    l: int
    backbone_channels: int
    skip_channels: int
    size: int


@dataclass
class StageFeatures:
    """The (backbone, skip) pair arriving at decoder stage l."""

    l: int
    x: np.ndarray  # backbone features (N, C, H, W)
    h: np.ndarray  # skip features (N, C_s, H, W)


def stage_average_map(x):
    """Channel-mean feature map, keeping a singleton channel axis."""
    x = np.asarray(x, dtype=np.float32)
    if x.ndim != 4:
        raise ShapeError(f"stage_average_map expects NCHW, got shape {x.shape}")
    return x.mean(axis=1, keepdims=True, dtype=np.float32)


def sinusoidal_embedding(t, dim):
    """Classic sin/cos position embedding of (broadcastable) step indices."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    half = dim // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half - 1, 1))
    args = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(args), np.cos(args)], axis=1).astype(np.float32)


class UNetModel:
    """Immutable-weight noise predictor epsilon_theta(x_t, t)."""

    def __init__(self, config, params):
        self.config = config
        self.params = params  # name -> Node
        self.stage_sites = self._build_sites(config)

    @staticmethod
    def _build_sites(config):
        widths = config.widths
        levels = len(widths)
        sites = []
        for l in range(1, levels + 1):
            # stage 1 is the coarsest: widths reversed
            ch = widths[levels - l]
            size = config.image_size >> (levels - l)
            sites.append(StageSite(l=l, backbone_channels=ch, skip_channels=ch, size=size))
        return tuple(sites)

    # -- construction -------------------------------------------------------

    @classmethod
    def init(cls, config, rng):
        """He-style random init; the output conv starts small (but nonzero,
        so one optimizer step reaches every weight)."""
        params = {}

        def conv_param(name, c_out, c_in, k, gain=1.0):
            std = gain * np.sqrt(2.0 / (c_in * k * k))
            w = rng.stream(name).normals((c_out, c_in, k, k)) * np.float32(std)
            params[f"{name}.w"] = ad.parameter(w, name=f"{name}.w")
            params[f"{name}.b"] = ad.parameter(np.zeros(c_out, np.float32), name=f"{name}.b")

        def norm_param(name, c):
            params[f"{name}.gamma"] = ad.parameter(np.ones(c, np.float32), name=f"{name}.gamma")
            params[f"{name}.beta"] = ad.parameter(np.zeros(c, np.float32), name=f"{name}.beta")

        def linear_param(name, d_in, d_out):
            std = np.sqrt(1.0 / d_in)
            w = rng.stream(name).normals((d_in, d_out)) * np.float32(std)
            params[f"{name}.w"] = ad.parameter(w, name=f"{name}.w")
            params[f"{name}.b"] = ad.parameter(np.zeros(d_out, np.float32), name=f"{name}.b")

        def resblock_params(name, c, tdim):
            norm_param(f"{name}.norm1", c)
            conv_param(f"{name}.conv1", c, c, 3)
            linear_param(f"{name}.temb", tdim, c)
            norm_param(f"{name}.norm2", c)
            conv_param(f"{name}.conv2", c, c, 3)

        widths = config.widths
        tdim = config.time_embed_dim
        linear_param("time_mlp.fc1", tdim, tdim)
        linear_param("time_mlp.fc2", tdim, tdim)
        conv_param("conv_in", widths[0], config.in_channels, 3)
        for i, c in enumerate(widths):
            resblock_params(f"enc{i}.block", c, tdim)
            if i + 1 < len(widths):
                conv_param(f"down{i}.conv", widths[i + 1], c, 3)
        resblock_params("mid.block", widths[-1], tdim)
        levels = len(widths)
        for l in range(1, levels + 1):
            c = widths[levels - l]
            conv_param(f"dec{l}.reduce", c, 2 * c, 3)
            resblock_params(f"dec{l}.block", c, tdim)
            if l < levels:
                conv_param(f"dec{l}.up_conv", widths[levels - l - 1], c, 3)
        norm_param("norm_out", widths[0])
        conv_param("conv_out", config.in_channels, widths[0], 3, gain=0.1)
        return cls(config, params)

    # -- persistence --------------------------------------------------------

    def weight_arrays(self):
        return {name: p.value for name, p in sorted(self.params.items())}

    @classmethod
    def from_weights(cls, config, tensors):
        template = cls.init(config, _ZeroRng())
        for name, p in template.params.items():
            if name not in tensors:
                raise ConfigError(f"checkpoint is missing weight {name!r}")
            arr = ad.as_tensor(tensors[name])
            if arr.shape != p.value.shape:
                raise ConfigError(
                    f"weight {name!r} shape {arr.shape} != expected {p.value.shape}"
                )
            p.value = arr.copy()
        return template

    # -- forward ------------------------------------------------------------

    def _conv(self, name, x, padding=1):
        return ad.conv2d(x, self.params[f"{name}.w"], self.params[f"{name}.b"],
                         stride=1, padding=padding)

    def _norm(self, name, x):
        return ad.group_norm(x, self.config.groups,
                             self.params[f"{name}.gamma"], self.params[f"{name}.beta"])

    def _linear(self, name, x):
        return ad.linear(x, self.params[f"{name}.w"], self.params[f"{name}.b"])

    def _resblock(self, name, x, temb):
        h = self._conv(f"{name}.conv1", ad.silu(self._norm(f"{name}.norm1", x)))
        proj = self._linear(f"{name}.temb", ad.silu(temb))
        n, c = proj.value.shape
        h = ad.add(h, ad.reshape(proj, (n, c, 1, 1)))
        h = self._conv(f"{name}.conv2", ad.silu(self._norm(f"{name}.norm2", h)))
        return ad.add(x, h)

    def forward(self, x, t, modulator=None, tap=None):
        """Predict the injected noise for a batch of noisy images.

        x: Node or array (N, in_channels, H, W); t: int or (N,) step indices.
        modulator, if given, maps StageFeatures -> StageFeatures at each
        decoder concat site (inference-time hook; it does not carry
        gradients).  tap(l, pre, post, fused) observes the raw arrays.
        """
        if not isinstance(x, ad.Node):
            x = ad.constant(ad.as_tensor(x))
        n, c, hh, ww = x.value.shape
        levels = len(self.config.widths)
        if hh % (1 << (levels - 1)) or ww % (1 << (levels - 1)):
            raise ShapeError(
                f"input {x.value.shape} not divisible by 2^{levels - 1} spatially"
            )
        t_arr = np.broadcast_to(np.atleast_1d(np.asarray(t)), (n,))
        temb = ad.constant(sinusoidal_embedding(t_arr, self.config.time_embed_dim))
        temb = self._linear("time_mlp.fc2", ad.silu(self._linear("time_mlp.fc1", temb)))

        h = self._conv("conv_in", x)
        skips = []
        for i in range(levels):
            h = self._resblock(f"enc{i}.block", h, temb)
            skips.append(h)
            if i + 1 < levels:
                h = self._conv(f"down{i}.conv", ad.resample(h, "down2_avg"))
        h = self._resblock("mid.block", h, temb)

        for l in range(1, levels + 1):
            skip = skips.pop()
            backbone = h
            if modulator is not None or tap is not None:
                pre = StageFeatures(l=l, x=backbone.value, h=skip.value)
                post = modulator(pre) if modulator is not None else pre
                if post is not pre:
                    # values changed: splice the modulated arrays back in as
                    # constants (inference-only path, gradients not preserved)
                    if post.x is not pre.x:
                        backbone = ad.constant(post.x)
                    if post.h is not pre.h:
                        skip = ad.constant(post.h)
                fused = ad.concat_channels(backbone, skip)
                if tap is not None:
                    tap(l, pre, post, fused.value)
            else:
                fused = ad.concat_channels(backbone, skip)
            h = self._conv(f"dec{l}.reduce", fused)
            h = self._resblock(f"dec{l}.block", h, temb)
            if l < levels:
                h = self._conv(f"dec{l}.up_conv", ad.resample(h, "up2_nearest"))

        out = self._conv("conv_out", ad.silu(self._norm("norm_out", h)))
        return out

    def predict(self, x, t, modulator=None, tap=None):
        """Graph-free forward pass returning a float32 array."""
        with ad.no_grad():
            return self.forward(x, t, modulator=modulator, tap=tap).value


class _ZeroRng:
    """Placeholder stream source for building weight templates."""

    def stream(self, tag):
        return self

    def normals(self, shape, dtype=np.float32):
        return np.zeros(shape, dtype)
