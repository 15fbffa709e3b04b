"""Noise schedules, forward noising, training objective and ancestral sampling.

Forward process: x_t = sqrt(abar_t) x_0 + sqrt(1 - abar_t) eps with a linear
beta schedule.  Reverse process is ancestral DDPM with fixed variance
sigma_t^2 = beta_t and no noise draw at the final step.  Sampling is
deterministic given (seed, config): the initial state and the per-step noise
come from streams derived only from the seed, so runs that differ only in
decoder-stage hooks share identical noise (paired comparisons for free).
"""

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .errors import ConfigError, NumericError
from .rng import SeededRng, derive


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta/alpha/alpha-bar tables (float64, 1-indexed by step t)."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        for name in ("beta", "alpha", "alpha_bar"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.beta) == len(self.alpha) == len(self.alpha_bar) == self.T):
            raise ConfigError("schedule table lengths must equal T")


def make_schedule(kind, T, beta_start, beta_end):
    """Linear beta ramp from beta_start to beta_end inclusive."""
    if kind != "linear":
        raise ConfigError(f"unknown schedule kind {kind!r}")
    if T < 1:
        raise ConfigError(f"T must be >= 1, got {T}")
    if not (0 < beta_start <= beta_end < 1):
        raise ConfigError(
            f"require 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )
    if T == 1:
        beta = np.array([beta_start], dtype=np.float64)
    else:
        beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return NoiseSchedule(T=T, beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def _check_t(t, T):
    if not 1 <= int(t) <= T:
        raise ConfigError(f"step index {t} out of range [1, {T}]")


def forward_noise(x0, t, eps, schedule):
    """Closed-form forward marginal: the noised sample at step t."""
    x0 = np.asarray(x0, dtype=np.float32)
    eps = np.asarray(eps, dtype=np.float32)
    if eps.shape != x0.shape:
        raise ConfigError(f"eps shape {eps.shape} != x0 shape {x0.shape}")
    _check_t(t, schedule.T)
    ab = schedule.alpha_bar[int(t) - 1]
    return (np.float32(np.sqrt(ab)) * x0 + np.float32(np.sqrt(1.0 - ab)) * eps)


def _forward_noise_batch(x0, t_arr, eps, schedule):
    ab = schedule.alpha_bar[t_arr - 1].reshape(-1, 1, 1, 1)
    return (np.sqrt(ab).astype(np.float32) * x0
            + np.sqrt(1.0 - ab).astype(np.float32) * eps)


def training_loss(model, x0_batch, rng, schedule):
    """Mean squared error between injected and predicted noise.

    Per batch item: t ~ Uniform[1, T], eps ~ N(0, I).
    """
    x0 = ad.as_tensor(x0_batch)
    if x0.shape[0] == 0:
        raise ConfigError("training batch must be nonempty")
    n = x0.shape[0]
    t_arr = np.asarray(rng.stream("t").integers(1, schedule.T + 1, n))
    eps = rng.stream("eps").normals(x0.shape)
    x_t = _forward_noise_batch(x0, t_arr, eps, schedule)
    pred = model.forward(ad.constant(x_t), t_arr)
    diff = ad.sub(pred, ad.constant(eps))
    return ad.mean_all(ad.mul(diff, diff))


@dataclass
class TrajectoryRecord:
    """Per-step states captured during one sampling run (steps descend T..1)."""

    steps: list = field(default_factory=list)
    x_t: list = field(default_factory=list)       # state after the step's update
    x0_pred: list = field(default_factory=list)   # clean estimate implied by eps_hat
    features: dict = field(default_factory=dict)  # stage l -> list of (x, h, fused)

    def append(self, step, x_t, x0_pred):
        if self.steps and step >= self.steps[-1]:
            raise ConfigError("trajectory steps must strictly decrease")
        self.steps.append(int(step))
        self.x_t.append(np.asarray(x_t, dtype=np.float32).copy())
        self.x0_pred.append(np.asarray(x0_pred, dtype=np.float32).copy())

    def to_tensors(self):
        """Flatten into the checkpoint tensor-container naming scheme."""
        out = {"steps": np.asarray(self.steps, dtype=np.float32)}
        for i, step in enumerate(self.steps):
            out[f"xt.{i:04d}"] = self.x_t[i]
            out[f"x0pred.{i:04d}"] = self.x0_pred[i]
        return out

    @classmethod
    def from_tensors(cls, tensors):
        steps = [int(s) for s in tensors["steps"]]
        rec = cls()
        for i, step in enumerate(steps):
            rec.steps.append(step)
            rec.x_t.append(tensors[f"xt.{i:04d}"])
            rec.x0_pred.append(tensors[f"x0pred.{i:04d}"])
        return rec


def sample(model, schedule, seed, hooks=None, record=False, count=1,
           x_init=None, feature_tap=None):
    """Ancestral DDPM sampling from pure noise.

    hooks: optional StageFeatures modulator applied at decoder concat sites.
    Returns (final float32 batch, TrajectoryRecord or None).
    """
    size = model.config.image_size
    shape = (count, model.config.in_channels, size, size)
    if x_init is not None:
        x = ad.as_tensor(x_init).copy()
        if x.shape != shape:
            raise ConfigError(f"x_init shape {x.shape} != {shape}")
    else:
        x = derive(seed, "xT").normals(shape)
    z_rng = derive(seed, "z")
    rec = TrajectoryRecord() if record else None

    for t in range(schedule.T, 0, -1):
        eps_hat = model.predict(x, t, modulator=hooks, tap=feature_tap)
        if not np.all(np.isfinite(eps_hat)):
            raise NumericError(f"NaN/Inf in noise prediction at step {t}", step=t)
        beta = schedule.beta[t - 1]
        alpha = schedule.alpha[t - 1]
        ab = schedule.alpha_bar[t - 1]
        # clean estimate: invert the forward marginal with the predicted noise
        x0_pred = np.float32(1.0 / np.sqrt(ab)) * (
            x - np.float32(np.sqrt(1.0 - ab)) * eps_hat
        )
        coef = np.float32(beta / np.sqrt(1.0 - ab))
        x = np.float32(1.0 / np.sqrt(alpha)) * (x - coef * eps_hat)
        if t > 1:
            z = z_rng.normals(shape)
            x = x + np.float32(np.sqrt(beta)) * z
        if not np.all(np.isfinite(x)):
            raise NumericError(f"NaN/Inf in sampler state at step {t}", step=t)
        if rec is not None:
            rec.append(t, x, x0_pred)
    return x, rec
