"""freeu-lab: a desk-scale diffusion laboratory.

Trainable toy DDPM U-Net with inference-time backbone/skip feature
re-weighting at the decoder concat sites, plus the Fourier-domain
measurement toolkit used to study it.
"""

from .diffusion import (NoiseSchedule, TrajectoryRecord, forward_noise,
                        make_schedule, sample, training_loss)
from .errors import ConfigError, NumericError, ShapeError
from .freeu import (FactorMap, FreeUConfig, FreeUStageConfig,
                    apply_backbone_scaling, apply_skip_spectral,
                    backbone_factor_map, default_config, modulate_stage,
                    radial_mask)
from .rng import SeededRng, derive
from .spectral import (ComplexGrid, SpectrumProfile, feature_spectrum, fft2,
                       ifft2, relative_log_amplitude, split_low_high,
                       trajectory_band_stats)
from .unet import StageFeatures, StageSite, UNetConfig, UNetModel, \
    sinusoidal_embedding, stage_average_map

__version__ = "0.1.0"

__all__ = [
    "ComplexGrid", "ConfigError", "FactorMap", "FreeUConfig",
    "FreeUStageConfig", "NoiseSchedule", "NumericError", "SeededRng",
    "ShapeError", "SpectrumProfile", "StageFeatures", "StageSite",
    "TrajectoryRecord", "UNetConfig", "UNetModel",
    "apply_backbone_scaling", "apply_skip_spectral", "backbone_factor_map",
    "default_config", "derive", "feature_spectrum", "fft2", "forward_noise",
    "ifft2", "make_schedule", "modulate_stage", "radial_mask",
    "relative_log_amplitude", "sample", "sinusoidal_embedding",
    "split_low_high", "stage_average_map", "trajectory_band_stats",
    "training_loss",
]
