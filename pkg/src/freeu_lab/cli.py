"""Command-line front end.

Verbs: synth-data, train, sample, compare, figure, serve.  Each takes
--config plus targeted overrides.  Exit codes: 0 success, 2 configuration
error, 3 runtime numeric failure.
"""

import argparse
import sys

from . import checkpoint as ckpt
from .config import default_run_config, load_run_config
from .dataset import synth_dataset
from .errors import ConfigError, NumericError
from .freeu import FreeUConfig, FreeUStageConfig
from .pipelines import SampleJob, figure_pipelines, run_sample_job, write_pgm
from .training import load_model_checkpoint, train


def _load_config(args):
    if getattr(args, "config", None):
        cfg = load_run_config(args.config)
    else:
        cfg = default_run_config()
    return cfg


def _override_freeu(freeu, sites, args):
    """Fold --b1/--s1/--b2/--s2 into the per-stage config."""
    touched = {1: {}, 2: {}}
    for stage, knob, key in ((1, "b1", "b"), (1, "s1", "s"), (2, "b2", "b"), (2, "s2", "s")):
        val = getattr(args, knob, None)
        if val is not None:
            touched[stage][key] = val
    if not any(touched.values()):
        return freeu
    by_l = {st.l: st.to_dict() for st in freeu.stages}
    site_by_l = {s.l: s for s in sites}
    for l, upd in touched.items():
        if not upd:
            continue
        if l not in site_by_l:
            raise ConfigError(f"model has no decoder stage {l}")
        entry = by_l.get(l, {
            "l": l, "b": 1.0, "s": 1.0,
            "r_thresh": site_by_l[l].size / 4.0,
        })
        entry.update(upd)
        by_l[l] = entry
    stages = tuple(FreeUStageConfig.from_dict(d) for _, d in sorted(by_l.items()))
    return FreeUConfig(stages=stages, enabled=True)


def cmd_synth_data(args):
    cfg = _load_config(args)
    seed = args.seed if args.seed is not None else cfg.dataset.seed
    data = synth_dataset(cfg.dataset.kind, cfg.dataset.count, cfg.dataset.size, seed)
    out = args.out or "dataset.ckpt"
    ckpt.save(out, {"images": data}, {"kind": "dataset", "seed": seed})
    for i in range(min(4, data.shape[0])):
        write_pgm(f"{out}.preview_{i}.pgm", data[i, 0])
    print(f"wrote {data.shape[0]} images to {out}")
    return 0


def cmd_train(args):
    cfg = _load_config(args)
    path = train(
        cfg,
        out_dir=args.out or cfg.out_dir,
        resume_from=args.resume,
        total_steps=args.steps,
    )
    print(f"checkpoint: {path}")
    return 0


def _sample_like(args, compare):
    cfg = _load_config(args)
    model, run_cfg, _, _ = load_model_checkpoint(args.ckpt)
    freeu = _override_freeu(cfg.freeu, model.stage_sites, args)
    job = SampleJob(
        seed=args.seed if args.seed is not None else 0,
        count=args.count,
        steps=args.steps or 0,
        freeu=freeu,
        record_trajectory=args.record,
        compare=compare,
    )
    out_dir = args.out or ("compare_out" if compare else "sample_out")
    run_sample_job(args.ckpt, job, out_dir)
    print(f"artifacts in {out_dir}")
    return 0


def cmd_sample(args):
    return _sample_like(args, compare=False)


def cmd_compare(args):
    return _sample_like(args, compare=True)


def cmd_figure(args):
    params = {}
    if args.seed is not None:
        params["seed"] = args.seed
    figure_pipelines(args.name, args.ckpt, args.out or f"{args.name}_out", **params)
    print(f"figure data in {args.out or args.name + '_out'}")
    return 0


def cmd_serve(args):
    from .server import serve

    serve(args.ckpt, port=args.port)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="freeu-lab")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, ckpt_required=False):
        sp.add_argument("--config", help="run config YAML (defaults used if omitted)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        if ckpt_required:
            sp.add_argument("--ckpt", required=True, help="model checkpoint path")

    sp = sub.add_parser("synth-data", help="generate the synthetic dataset")
    common(sp)
    sp.set_defaults(func=cmd_synth_data)

    sp = sub.add_parser("train", help="train the toy diffusion model")
    common(sp)
    sp.add_argument("--steps", type=int, default=None, help="override training steps")
    sp.add_argument("--resume", default=None, help="resume from checkpoint")
    sp.set_defaults(func=cmd_train)

    for verb, fn in (("sample", cmd_sample), ("compare", cmd_compare)):
        sp = sub.add_parser(verb)
        common(sp, ckpt_required=True)
        sp.add_argument("--steps", type=int, default=None, help="sampling steps")
        sp.add_argument("--count", type=int, default=1)
        sp.add_argument("--record", action="store_true", help="record the trajectory")
        for knob in ("b1", "s1", "b2", "s2"):
            sp.add_argument(f"--{knob}", type=float, default=None)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("figure", help="run a figure-reproduction pipeline")
    sp.add_argument("name", choices=["fig2", "fig5", "fig6", "fig13"])
    common(sp, ckpt_required=True)
    sp.set_defaults(func=cmd_figure)

    sp = sub.add_parser("serve", help="start the tuning HTTP service")
    common(sp, ckpt_required=True)
    sp.add_argument("--port", type=int, default=8765)
    sp.set_defaults(func=cmd_serve)

    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
