"""Run configuration: typed sections, strict YAML loading (unknown keys are
rejected so a typo in a tuning knob can never silently no-op).

The full schema with defaults is documented in docs/config.md and mirrored
by default_run_config().
"""

from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .freeu import FreeUConfig
from .unet import UNetConfig


def _check_keys(d, known, section):
    unknown = set(d) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "shapes_texture"
    count: int = 256
    size: int = 32
    seed: int = 0

    def to_dict(self):
        return {"kind": self.kind, "count": self.count, "size": self.size, "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        _check_keys(d, ("kind", "count", "size", "seed"), "dataset")
        return cls(**d)


@dataclass(frozen=True)
class ScheduleSpec:
    kind: str = "linear"
    steps: int = 200
    beta_start: float = 1e-4
    beta_end: float = 0.02

    def to_dict(self):
        return {
            "kind": self.kind, "steps": self.steps,
            "beta_start": self.beta_start, "beta_end": self.beta_end,
        }

    @classmethod
    def from_dict(cls, d):
        _check_keys(d, ("kind", "steps", "beta_start", "beta_end"), "schedule")
        return cls(**d)


@dataclass(frozen=True)
class TrainSpec:
    steps: int = 6000
    batch: int = 8
    lr: float = 2e-4
    seed: int = 0
    log_every: int = 1
    checkpoint_every: int = 500

    def to_dict(self):
        return {
            "steps": self.steps, "batch": self.batch, "lr": self.lr,
            "seed": self.seed, "log_every": self.log_every,
            "checkpoint_every": self.checkpoint_every,
        }

    @classmethod
    def from_dict(cls, d):
        _check_keys(
            d, ("steps", "batch", "lr", "seed", "log_every", "checkpoint_every"),
            "train",
        )
        return cls(**d)


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    unet: UNetConfig = field(default_factory=UNetConfig)
    train: TrainSpec = field(default_factory=TrainSpec)
    freeu: FreeUConfig = field(default_factory=FreeUConfig)
    out_dir: str = "artifacts"

    def __post_init__(self):
        if self.unet.image_size != self.dataset.size:
            raise ConfigError(
                f"unet image_size {self.unet.image_size} != dataset size "
                f"{self.dataset.size}"
            )

    def to_dict(self):
        return {
            "dataset": self.dataset.to_dict(),
            "schedule": self.schedule.to_dict(),
            "unet": self.unet.to_dict(),
            "train": self.train.to_dict(),
            "freeu": self.freeu.to_dict(),
            "out_dir": self.out_dir,
        }

    @classmethod
    def from_dict(cls, d):
        _check_keys(
            d, ("dataset", "schedule", "unet", "train", "freeu", "out_dir"),
            "run config",
        )
        try:
            return cls(
                dataset=DatasetSpec.from_dict(d.get("dataset", {})),
                schedule=ScheduleSpec.from_dict(d.get("schedule", {})),
                unet=UNetConfig.from_dict(d.get("unet", {})),
                train=TrainSpec.from_dict(d.get("train", {})),
                freeu=FreeUConfig.from_dict(d.get("freeu", {"enabled": True, "stages": []})),
                out_dir=d.get("out_dir", "artifacts"),
            )
        except TypeError as e:
            raise ConfigError(f"malformed run config: {e}") from None


def default_run_config():
    return RunConfig()


def load_run_config(path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as e:
        raise ConfigError(f"config parse error in {path}: {e}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config root must be a mapping, got {type(raw).__name__}")
    return RunConfig.from_dict(raw)


def save_run_config(path, config):
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=True)
