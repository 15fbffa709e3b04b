"""Inference-time decoder-stage feature re-weighting.

Two knobs per decoder stage: a backbone amplification factor b applied
through a structure-related spatial factor map (built from the channel-mean
feature map via per-sample min-max normalization, and confined to the
leading half of the channels), and a skip attenuation factor s applied to
Fourier coefficients below a radial threshold.

Everything here is a pure function on float32 arrays; b=1, s=1 selects a
bit-exact identity fast path so an "enabled but neutral" config can never
perturb a sampling run.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericError, ShapeError
from .spectral import _fft2_raw, _unshift2, radius_grid, symmetrize_mask
from .unet import StageFeatures, stage_average_map


@dataclass(frozen=True)
class FreeUStageConfig:
    """Per-decoder-stage tuning knobs."""

    l: int
    b: float = 1.0
    s: float = 1.0
    r_thresh: float = 0.0
    channel_fraction: float = 0.5
    structure_scaling: bool = True

    def __post_init__(self):
        if self.b <= 0:
            raise ConfigError(f"stage {self.l}: b must be > 0, got {self.b}")
        if self.s < 0:
            raise ConfigError(f"stage {self.l}: s must be >= 0, got {self.s}")
        if self.r_thresh < 0:
            raise ConfigError(f"stage {self.l}: r_thresh must be >= 0, got {self.r_thresh}")
        if not 0 < self.channel_fraction <= 1:
            raise ConfigError(
                f"stage {self.l}: channel_fraction must be in (0, 1], "
                f"got {self.channel_fraction}"
            )

    @property
    def is_identity(self):
        return self.b == 1.0 and self.s == 1.0

    def to_dict(self):
        return {
            "l": self.l,
            "b": self.b,
            "s": self.s,
            "r_thresh": self.r_thresh,
            "channel_fraction": self.channel_fraction,
            "structure_scaling": self.structure_scaling,
        }

    @classmethod
    def from_dict(cls, d):
        known = {"l", "b", "s", "r_thresh", "channel_fraction", "structure_scaling"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown stage config keys: {sorted(unknown)}")
        if "l" not in d:
            raise ConfigError("stage config requires key 'l'")
        return cls(**d)


@dataclass(frozen=True)
class FreeUConfig:
    """Ordered per-stage configs; stages without an entry pass through."""

    stages: tuple = field(default_factory=tuple)
    enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        seen = set()
        for st in self.stages:
            if st.l in seen:
                raise ConfigError(f"duplicate FreeU stage entry for l={st.l}")
            seen.add(st.l)

    def stage(self, l):
        for st in self.stages:
            if st.l == l:
                return st
        return None

    @property
    def is_identity(self):
        return not self.enabled or all(st.is_identity for st in self.stages)

    def modulator(self):
        """A StageFeatures -> StageFeatures callback for the U-Net decoder,
        or None when the config is globally disabled."""
        if not self.enabled:
            return None
        by_stage = {st.l: st for st in self.stages}

        def hook(features):
            cfg = by_stage.get(features.l)
            if cfg is None:
                return features
            return modulate_stage(features, cfg)

        return hook

    def to_dict(self):
        return {"enabled": self.enabled, "stages": [st.to_dict() for st in self.stages]}

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {"enabled", "stages"}
        if unknown:
            raise ConfigError(f"unknown FreeU config keys: {sorted(unknown)}")
        stages = tuple(FreeUStageConfig.from_dict(s) for s in d.get("stages", []))
        return cls(stages=stages, enabled=bool(d.get("enabled", True)))

    @classmethod
    def identity(cls):
        return cls(stages=(), enabled=True)


def default_config(stage_sites):
    """Tuning defaults covering the two coarsest decoder stages: gentle
    backbone amplification plus mild low-frequency skip attenuation at a
    quarter-resolution radial threshold."""
    sites = sorted(stage_sites, key=lambda s: s.l)[:2]
    params = [(1.3, 0.9), (1.2, 0.9)]
    stages = tuple(
        FreeUStageConfig(l=site.l, b=b, s=s, r_thresh=site.size / 4.0)
        for site, (b, s) in zip(sites, params)
    )
    return FreeUConfig(stages=stages)


@dataclass
class FactorMap:
    """Per-sample spatial scaling map, affine in the channel-mean feature."""

    alpha: np.ndarray  # (N, 1, H, W) float32


def backbone_factor_map(xbar, b):
    """Min-max normalize the channel-mean map per sample and stretch it onto
    [1, b]; a constant map degenerates to all-ones."""
    xbar = np.asarray(xbar, dtype=np.float32)
    if xbar.ndim != 4 or xbar.shape[1] != 1:
        raise ShapeError(f"backbone_factor_map expects (N,1,H,W), got {xbar.shape}")
    if not np.all(np.isfinite(xbar)):
        raise NumericError("backbone_factor_map: non-finite channel-mean map")
    lo = xbar.min(axis=(2, 3), keepdims=True)
    hi = xbar.max(axis=(2, 3), keepdims=True)
    span = hi - lo
    safe = np.where(span > 0, span, np.float32(1))
    unit = np.where(span > 0, (xbar - lo) / safe, np.float32(0))
    alpha = np.float32(b - 1) * unit + np.float32(1)
    return FactorMap(alpha.astype(np.float32))


def apply_backbone_scaling(x, factor_map, channel_fraction=0.5):
    """Multiply the leading floor(C * fraction) channels by the factor map;
    the remaining channels pass through bit-identically."""
    x = np.asarray(x, dtype=np.float32)
    alpha = factor_map.alpha if isinstance(factor_map, FactorMap) else np.asarray(factor_map)
    if x.ndim != 4:
        raise ShapeError(f"apply_backbone_scaling expects NCHW, got {x.shape}")
    if alpha.shape[0] != x.shape[0] or alpha.shape[2:] != x.shape[2:]:
        raise ShapeError(
            f"factor map shape {alpha.shape} does not match features {x.shape}"
        )
    c = x.shape[1]
    k = int(np.floor(c * channel_fraction))
    out = x.copy()
    out[:, :k] = x[:, :k] * alpha.astype(np.float32)
    return out


def radial_mask(h, w, r_thresh, s):
    """Centered-grid mask: s where the radius is below threshold, 1 elsewhere."""
    rr = radius_grid(h, w)
    return np.where(rr < r_thresh, np.float32(s), np.float32(1)).astype(np.float32)


def apply_skip_spectral(h_feat, s, r_thresh):
    """Attenuate sub-threshold Fourier coefficients of every skip channel.

    FFT -> centered radial mask (symmetrized) -> inverse FFT -> real part.
    """
    h_feat = np.asarray(h_feat, dtype=np.float32)
    if h_feat.ndim != 4:
        raise ShapeError(f"apply_skip_spectral expects NCHW, got {h_feat.shape}")
    n, c, hh, ww = h_feat.shape
    mask = symmetrize_mask(radial_mask(hh, ww, r_thresh, s))
    mask_u = _unshift2(mask)
    spec = _fft2_raw(h_feat.reshape(n * c, hh, ww).astype(np.float64))
    out_c = _fft2_raw(spec * mask_u, inverse=True)
    residue = np.abs(out_c.imag).max() if out_c.size else 0.0
    if residue > 1e-3:
        raise NumericError(
            f"apply_skip_spectral imaginary residue {residue:.3e} exceeds 1e-3 "
            "(broken mask symmetry)"
        )
    return out_c.real.reshape(n, c, hh, ww).astype(np.float32)


def modulate_stage(features, cfg):
    """Apply the full per-stage re-weighting to a (backbone, skip) pair."""
    if cfg.l != features.l:
        raise ConfigError(f"config targets stage {cfg.l} but features are stage {features.l}")
    if cfg.is_identity:
        return features
    x = features.x
    if cfg.b != 1.0:
        if cfg.structure_scaling:
            alpha = backbone_factor_map(stage_average_map(x), cfg.b)
        else:
            n, _, hh, ww = np.asarray(x).shape
            alpha = FactorMap(np.full((n, 1, hh, ww), cfg.b, dtype=np.float32))
        x = apply_backbone_scaling(x, alpha, cfg.channel_fraction)
    h = features.h
    if cfg.s != 1.0:
        h = apply_skip_spectral(h, cfg.s, cfg.r_thresh)
    return StageFeatures(l=features.l, x=x, h=h)
