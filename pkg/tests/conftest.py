import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from freeu_lab.config import DatasetSpec, RunConfig, ScheduleSpec, TrainSpec
from freeu_lab.training import train
from freeu_lab.unet import UNetConfig


def make_tiny_config(steps=4, seed=3, **overrides):
    """A miniature run config (16x16, two levels, 8 base channels) for tests
    that need a real trainable model but not the full default scale."""
    kwargs = dict(
        dataset=DatasetSpec(count=16, size=16, seed=1),
        schedule=ScheduleSpec(steps=10),
        unet=UNetConfig(base_channels=8, channel_mults=(1, 2), groups=4,
                        time_embed_dim=16, image_size=16),
        train=TrainSpec(steps=steps, batch=2, seed=seed, checkpoint_every=2),
    )
    kwargs.update(overrides)
    return RunConfig(**kwargs)


@pytest.fixture(scope="session")
def tiny_config():
    return make_tiny_config()


@pytest.fixture(scope="session")
def tiny_ckpt(tiny_config, tmp_path_factory):
    """A briefly trained miniature checkpoint shared across the session."""
    out = tmp_path_factory.mktemp("tiny_train")
    return train(tiny_config, out_dir=str(out))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
