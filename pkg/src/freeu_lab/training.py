"""Training loop with deterministic batching and bit-exact resume.

Every stochastic choice at step k comes from a stream derived from
(seed, "train", k), so a run resumed from any checkpoint replays exactly the
same draws as an uninterrupted run.  Adam state is checkpointed alongside
the weights for the same reason.
"""

import os

import numpy as np

from . import autodiff as ad
from . import checkpoint as ckpt
from .dataset import synth_dataset
from .diffusion import make_schedule, training_loss
from .errors import NumericError
from .rng import derive
from .unet import UNetModel

CKPT_NAME = "model.ckpt"
LOSS_LOG_NAME = "loss.csv"


def build_model(config):
    """Freshly initialized model, deterministic in the training seed."""
    return UNetModel.init(config.unet, derive(config.train.seed, "init"))


def schedule_from_config(config, steps=None):
    s = config.schedule
    return make_schedule(s.kind, steps or s.steps, s.beta_start, s.beta_end)


def checkpoint_tensors(model, opt):
    tensors = dict(model.weight_arrays())
    tensors.update(opt.state_tensors())
    return tensors


def save_model_checkpoint(path, model, opt, config, step):
    meta = {
        "kind": "model",
        "run_config": config.to_dict(),
        "step": int(step),
    }
    ckpt.save(path, checkpoint_tensors(model, opt), meta)


def load_model_checkpoint(path):
    """Returns (model, run_config, tensors, meta)."""
    from .config import RunConfig

    tensors, meta = ckpt.load(path)
    config = RunConfig.from_dict(meta["run_config"])
    weights = {k: v for k, v in tensors.items() if not k.startswith("opt.")}
    model = UNetModel.from_weights(config.unet, weights)
    return model, config, tensors, meta


def train(config, out_dir=None, resume_from=None, total_steps=None):
    """Run (or continue) training; returns the final checkpoint path.

    A NaN loss aborts with NumericError after re-saving the last good
    checkpoint at the output path.
    """
    out_dir = out_dir or config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    total_steps = config.train.steps if total_steps is None else int(total_steps)

    data = synth_dataset(
        config.dataset.kind, config.dataset.count, config.dataset.size,
        config.dataset.seed,
    )
    schedule = schedule_from_config(config)

    if resume_from is not None:
        model, _, tensors, meta = load_model_checkpoint(resume_from)
        opt = ad.Adam(model.params, lr=config.train.lr)
        opt.load_state_tensors(tensors, meta["step"])
        start_step = int(meta["step"])
    else:
        model = build_model(config)
        opt = ad.Adam(model.params, lr=config.train.lr)
        start_step = 0

    ckpt_path = os.path.join(out_dir, CKPT_NAME)
    loss_path = os.path.join(out_dir, LOSS_LOG_NAME)
    loss_rows = ["step,loss"]
    if resume_from is not None and os.path.exists(loss_path):
        # continue the log, dropping rows past the checkpoint we resume from
        with open(loss_path) as f:
            next(f)
            for line in f:
                if int(line.split(",")[0]) <= start_step:
                    loss_rows.append(line.strip())
    last_good = ckpt.dumps(
        checkpoint_tensors(model, opt),
        {"kind": "model", "run_config": config.to_dict(), "step": start_step},
    )

    for step in range(start_step + 1, total_steps + 1):
        rng = derive(config.train.seed, "train", step)
        idx = np.asarray(rng.stream("batch").integers(0, len(data), config.train.batch))
        batch = data[idx]
        opt.zero_grad()
        try:
            loss = training_loss(model, batch, rng.stream("loss"), schedule)
        except NumericError:
            ckpt.atomic_write_bytes(ckpt_path, last_good)
            raise
        loss_val = float(loss.value)
        if not np.isfinite(loss_val):
            ckpt.atomic_write_bytes(ckpt_path, last_good)
            raise NumericError(f"NaN loss at step {step}; last-good checkpoint kept")
        ad.backward(loss)
        opt.step()
        if step % config.train.log_every == 0 or step == total_steps:
            loss_rows.append(f"{step},{loss_val:.9g}")
        if step % config.train.checkpoint_every == 0 or step == total_steps:
            last_good = ckpt.dumps(
                checkpoint_tensors(model, opt),
                {"kind": "model", "run_config": config.to_dict(), "step": step},
            )
            ckpt.atomic_write_bytes(ckpt_path, last_good)
            # flush the log alongside each periodic save so an interrupted
            # run can resume with a consistent checkpoint/log pair
            ckpt.atomic_write_text(loss_path, "\n".join(loss_rows) + "\n")

    if total_steps == start_step or total_steps == 0:
        ckpt.atomic_write_bytes(ckpt_path, last_good)
    ckpt.atomic_write_text(loss_path, "\n".join(loss_rows) + "\n")
    return ckpt_path


def smoothed_loss(loss_csv_path, window=100):
    """step -> trailing-window mean of logged losses (for the sanity gates)."""
    steps, losses = [], []
    with open(loss_csv_path) as f:
        next(f)
        for line in f:
            s, v = line.strip().split(",")
            steps.append(int(s))
            losses.append(float(v))
    losses = np.asarray(losses)
    out = {}
    for i, s in enumerate(steps):
        lo = max(0, i + 1 - window)
        out[s] = float(losses[lo:i + 1].mean())
    return out
