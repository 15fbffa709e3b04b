"""HTTP service exposing sampling, paired comparison and trajectory
inspection over a loaded checkpoint.

Request bodies are validated against the stage-config invariants (422 with
field-level messages on violation).  Sampling is CPU-bound, so jobs pass
through a bounded worker pool with a short admission queue; overload
returns 429 instead of letting latency collapse.
"""

import base64
import os
import threading
import time

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .diffusion import sample
from .errors import NumericError
from .freeu import FreeUConfig, default_config
from .pipelines import encode_pgm
from .spectral import relative_log_amplitude, trajectory_band_stats
from .training import load_model_checkpoint, schedule_from_config


class StageBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    l: int = Field(ge=1)
    b: float = Field(1.0, gt=0)
    s: float = Field(1.0, ge=0)
    r_thresh: float = Field(0.0, ge=0)
    channel_fraction: float = Field(0.5, gt=0, le=1)
    structure_scaling: bool = True


class FreeUBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    enabled: bool = True
    stages: list[StageBody] = []

    @field_validator("stages")
    @classmethod
    def _unique_stages(cls, v):
        seen = set()
        for st in v:
            if st.l in seen:
                raise ValueError(f"duplicate stage entry for l={st.l}")
            seen.add(st.l)
        return v

    def to_config(self):
        return FreeUConfig.from_dict(self.model_dump())


class SampleBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    steps: int = Field(0, ge=0, le=1000)
    count: int = Field(1, ge=1, le=16)
    freeu: FreeUBody = FreeUBody()
    bands: int = Field(8, ge=2, le=16)


class CompareBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    steps: int = Field(0, ge=0, le=1000)
    freeu: FreeUBody = FreeUBody()
    bands: int = Field(8, ge=2, le=16)


class TrajectoryBody(BaseModel):
    model_config = ConfigDict(extra="forbid")

    seed: int
    steps: int = Field(0, ge=0, le=1000)
    freeu: FreeUBody = FreeUBody()
    r_cut: float = Field(4.0, ge=0)
    max_frames: int = Field(16, ge=1, le=64)


def _profile_payload(prof):
    return {
        "band_edges": [float(x) for x in prof.band_edges],
        "rel_log_amp": [float(x) for x in prof.rel_log_amp],
    }


def _images_payload(images, bands):
    out_images, out_spectra = [], []
    for i in range(images.shape[0]):
        img = images[i, 0]
        out_images.append(base64.b64encode(encode_pgm(img)).decode("ascii"))
        out_spectra.append(_profile_payload(relative_log_amplitude(img, bands)))
    return out_images, out_spectra


def create_app(ckpt_path, workers=None, queue_depth=8):
    model, run_config, _, meta = load_model_checkpoint(ckpt_path)
    app = FastAPI(title="freeu-lab")

    n_workers = max(1, workers if workers is not None else (os.cpu_count() or 2) - 1)
    worker_sem = threading.Semaphore(n_workers)
    admission = threading.Semaphore(n_workers + queue_depth)

    def run_limited(fn):
        if not admission.acquire(blocking=False):
            raise HTTPException(status_code=429, detail="sampling queue is full")
        try:
            with worker_sem:
                try:
                    return fn()
                except NumericError as e:
                    raise HTTPException(
                        status_code=500,
                        detail={"error": str(e), "step": e.step},
                    ) from e
        finally:
            admission.release()

    def job_schedule(steps):
        return schedule_from_config(run_config, steps=steps or None)

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "model": {
                "image_size": model.config.image_size,
                "in_channels": model.config.in_channels,
                "widths": list(model.config.widths),
                "schedule_steps": run_config.schedule.steps,
                "trained_steps": meta.get("step"),
                "parameters": int(sum(p.value.size for p in model.params.values())),
            },
        }

    @app.get("/api/config")
    def config():
        return {
            "freeu": default_config(model.stage_sites).to_dict(),
            "stages": [
                {
                    "l": s.l,
                    "backbone_channels": s.backbone_channels,
                    "skip_channels": s.skip_channels,
                    "size": s.size,
                }
                for s in model.stage_sites
            ],
            "slider_limits": {"b": [0.5, 2.0], "s": [0.0, 1.5]},
        }

    @app.post("/api/sample")
    def api_sample(body: SampleBody):
        def work():
            t0 = time.monotonic()
            schedule = job_schedule(body.steps)
            images, _ = sample(
                model, schedule, body.seed,
                hooks=body.freeu.to_config().modulator(), count=body.count,
            )
            imgs, spectra = _images_payload(images, body.bands)
            return {
                "images": imgs,
                "spectra": spectra,
                "timing_ms": (time.monotonic() - t0) * 1e3,
            }

        return run_limited(work)

    @app.post("/api/compare")
    def api_compare(body: CompareBody):
        def work():
            t0 = time.monotonic()
            schedule = job_schedule(body.steps)
            out = {}
            for name, hooks in (
                ("baseline", None),
                ("freeu", body.freeu.to_config().modulator()),
            ):
                images, _ = sample(model, schedule, body.seed, hooks=hooks, count=1)
                imgs, spectra = _images_payload(images, body.bands)
                out[name] = {"images": imgs, "spectra": spectra}
            out["timing_ms"] = (time.monotonic() - t0) * 1e3
            return out

        return run_limited(work)

    @app.post("/api/trajectory")
    def api_trajectory(body: TrajectoryBody):
        def work():
            schedule = job_schedule(body.steps)
            _, rec = sample(
                model, schedule, body.seed,
                hooks=body.freeu.to_config().modulator(), record=True, count=1,
            )
            stats = trajectory_band_stats(rec, body.r_cut)
            stride = max(1, len(rec.steps) // body.max_frames)
            frames = []
            for i in range(0, len(rec.steps), stride):
                img = rec.x_t[i][0, 0]
                # halve the resolution so scrubbing stays lightweight
                h, w = img.shape
                small = img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
                frames.append({
                    "step": int(rec.steps[i]),
                    "image": base64.b64encode(encode_pgm(small)).decode("ascii"),
                })
            return {
                "steps": [int(s) for s in stats.steps],
                "low_amp": [float(x) for x in stats.low_amp],
                "high_amp": [float(x) for x in stats.high_amp],
                "low_delta": [float(x) for x in stats.low_delta],
                "high_delta": [float(x) for x in stats.high_delta],
                "frames": frames,
            }

        return run_limited(work)

    return app


def serve(ckpt_path, port=8765, host="127.0.0.1"):
    import uvicorn

    uvicorn.run(create_app(ckpt_path), host=host, port=port)
