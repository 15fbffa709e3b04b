"""Inference-time feature re-weighting: paired baseline/modulated sampling.

Trains a small model (or reuses one from demo 01), then samples the same
seed twice — once plain, once with the decoder's backbone features
amplified and its skip features low-pass attenuated — and compares the
image spectra. Because the sampler draws its noise independently of the
modulation hooks, the two runs are exactly paired.

Usage: python3 demos/03_feature_reweighting.py [run_dir_from_demo_01]
"""

import os
import sys

import numpy as np

from freeu_lab.diffusion import sample
from freeu_lab.freeu import FreeUConfig, FreeUStageConfig, default_config
from freeu_lab.spectral import relative_log_amplitude
from freeu_lab.training import load_model_checkpoint, schedule_from_config

run_dir = sys.argv[1] if len(sys.argv) > 1 else "demo_run"
ckpt_path = os.path.join(run_dir, "model.ckpt")
if not os.path.exists(ckpt_path):
    sys.exit(f"no checkpoint at {ckpt_path} — run demos/01_train_and_sample.py first")

model, cfg, _, _ = load_model_checkpoint(ckpt_path)
schedule = schedule_from_config(cfg)

# tuned defaults: both coarse decoder stages, quarter-resolution threshold
freeu = default_config(model.stage_sites)
print("stage settings:")
for st in freeu.stages:
    print(f"  l={st.l}: backbone x{st.b}, skip low-pass s={st.s} below r={st.r_thresh}")

baseline, _ = sample(model, schedule, seed=42, count=8)
modulated, _ = sample(model, schedule, seed=42, hooks=freeu.modulator(), count=8)

def mean_profile(images):
    return np.mean([relative_log_amplitude(images[i, 0]).rel_log_amp
                    for i in range(images.shape[0])], axis=0)

pb, pm = mean_profile(baseline), mean_profile(modulated)
print("\nband  baseline  modulated   delta")
for k in range(len(pb)):
    print(f"  {k}   {pb[k]:8.3f}  {pm[k]:9.3f}  {pm[k] - pb[k]:+7.3f}")
print("\n(on a well-trained model the high bands move down — backbone "
      "amplification suppresses high-frequency content; at this demo's "
      "tiny scale the shift can be small)")

# the identity setting is a true no-op, bit for bit
identity = FreeUConfig(stages=tuple(
    FreeUStageConfig(l=st.l, b=1.0, s=1.0, r_thresh=st.r_thresh)
    for st in freeu.stages
))
same, _ = sample(model, schedule, seed=42, hooks=identity.modulator(), count=8)
assert same.tobytes() == baseline.tobytes()
print("identity settings (b=s=1) reproduced the baseline bit-exactly")
