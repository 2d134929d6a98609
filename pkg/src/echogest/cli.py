"""Command-line entry point.

Subcommands: simulate, profile, train, eval, lopo, finetune, plot. Every run
writes an effective-config echo file (JSON) before doing any work so failed
runs remain reproducible. Exit codes: 0 success, 1 domain error (one-line
diagnostic on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio_io import read_stereo
from .config import TransmitConfig, default_transmit_config
from .dataset import build_window_set, load_manifest, synth_dataset
from .echo import ReceivedAudio, compute_echo_profile, differentiate, trim_to_frames
from .errors import EchogestError, PreconditionError
from .labels import default_registry, load_registry
from .nn import ModelConfig
from .train import (
    TrainConfig,
    evaluate,
    fine_tune,
    load_checkpoint,
    lopo_evaluate,
    save_checkpoint,
    train_model,
)
from .wsep import read_wsep, write_wsep

_SIM_DEFAULTS = {"duration": 1.5, "jitter_scale": 1.0, "shift_scale": 1.0, "noise_sigma": 0.012}


def _parse_overrides(pairs, parser):
    """--set section.key=value overrides for tx/model/train/sim sections."""
    sections = {
        "tx": {f: None for f in ("f_lo_a", "f_hi_a", "f_lo_b", "f_hi_b", "sample_rate", "frame_len")},
        "model": {f.name: f.type for f in dataclasses.fields(ModelConfig)},
        "train": {f.name: f.type for f in dataclasses.fields(TrainConfig)},
        "sim": dict(_SIM_DEFAULTS),
    }
    out = {"tx": {}, "model": {}, "train": {}, "sim": {}}
    for pair in pairs or []:
        if "=" not in pair or "." not in pair.split("=", 1)[0]:
            parser.error(f"--set expects section.key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        section, field = key.split(".", 1)
        if section not in sections or field not in sections[section]:
            parser.error(f"unknown --set key {key!r}")
        try:
            out[section][field] = json.loads(value)
        except json.JSONDecodeError:
            parser.error(f"--set value for {key!r} is not a number/JSON literal: {value!r}")
    return out


def _transmit_config(overrides) -> TransmitConfig:
    tx = overrides.get("tx", {})
    if not tx:
        return default_transmit_config()
    base = default_transmit_config()
    a, b = base.tx_a, base.tx_b
    fs = tx.get("sample_rate", base.sample_rate)
    fl = int(tx.get("frame_len", base.frame_len))
    a = dataclasses.replace(a, f_start=tx.get("f_lo_a", a.f_start), f_end=tx.get("f_hi_a", a.f_end),
                            sample_rate=fs, n_samples=fl)
    b = dataclasses.replace(b, f_start=tx.get("f_lo_b", b.f_start), f_end=tx.get("f_hi_b", b.f_end),
                            sample_rate=fs, n_samples=fl)
    return TransmitConfig(tx_a=a, tx_b=b).validate()


def _model_config(overrides) -> ModelConfig:
    return ModelConfig(**overrides.get("model", {})).validate()


def _train_config(overrides, seed) -> TrainConfig:
    kwargs = dict(overrides.get("train", {}))
    kwargs.setdefault("seed", seed)
    return TrainConfig(**kwargs).validate()


def _echo_config(args, overrides, out_path: Path) -> None:
    """Write the effective run configuration before any real work happens."""
    if out_path.suffix:
        echo_path = out_path.with_name(out_path.name + ".run.json")
        out_path.parent.mkdir(parents=True, exist_ok=True)
    else:
        out_path.mkdir(parents=True, exist_ok=True)
        echo_path = out_path / "run_config.json"
    payload = {
        "version": __version__,
        "subcommand": args.cmd,
        "args": {k: v for k, v in sorted(vars(args).items()) if k not in ("cmd", "func")},
        "overrides": overrides,
    }
    echo_path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n",
                         encoding="utf-8")


def _registry(args):
    return load_registry(args.registry) if getattr(args, "registry", None) else default_registry()


def cmd_simulate(args, parser):
    overrides = _parse_overrides(args.set, parser)
    out = Path(args.out)
    _echo_config(args, overrides, out)
    sim = {**_SIM_DEFAULTS, **overrides["sim"]}
    manifest = synth_dataset(
        args.participants, args.sessions, args.reps,
        args.env.split(","), args.seed, out,
        registry=_registry(args), config=_transmit_config(overrides),
        duration=sim["duration"], jitter_scale=sim["jitter_scale"],
        shift_scale=sim["shift_scale"], noise_sigma=sim["noise_sigma"],
    )
    print(f"wrote {len(manifest.records)} records to {out}")
    return 0


def cmd_profile(args, parser):
    overrides = _parse_overrides(args.set, parser)
    out = Path(args.out)
    _echo_config(args, overrides, out)
    config = _transmit_config(overrides)
    stereo = read_stereo(args.infile, expected_rate=config.sample_rate)
    stereo = trim_to_frames(stereo, config.frame_len)
    mics = (
        ReceivedAudio(0, stereo[0], config.sample_rate),
        ReceivedAudio(1, stereo[1], config.sample_rate),
    )
    profile = compute_echo_profile(mics, config)
    if args.differential:
        profile = differentiate(profile)
    write_wsep(out, profile)
    print(f"wrote {profile.frames}x{profile.channels}x{profile.range_bins} profile to {out}")
    return 0


def _load_windows(manifest_path, participants=None):
    manifest = load_manifest(manifest_path)
    if participants is not None:
        keep = set(participants)
        manifest = manifest.subset(lambda r: r.participant_id in keep)
    return build_window_set(manifest)


def _participant_list(arg):
    return [int(p) for p in arg.split(",")] if arg else None


def cmd_train(args, parser):
    overrides = _parse_overrides(args.set, parser)
    out = Path(args.out)
    _echo_config(args, overrides, out)
    windows = _load_windows(args.manifest, _participant_list(args.participants))
    ckpt, _ = train_model(
        windows, _model_config(overrides), _train_config(overrides, args.seed),
        log_path=out.with_name(out.name + ".log"),
    )
    save_checkpoint(out, ckpt)
    print(f"trained on {len(windows)} windows from participants {ckpt.participants}; "
          f"checkpoint at {out}")
    return 0


def _write_report(report, out_dir: Path, stem: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    np.savetxt(out_dir / f"{stem}_confusion.csv", report.confusion, fmt="%d", delimiter=",")
    np.savetxt(out_dir / f"{stem}_confusion_normalized.csv",
               report.normalized_confusion, fmt="%.6f", delimiter=",")
    lines = [f"macro_f1={report.macro_f1:.6f}", f"accuracy={report.accuracy:.6f}"]
    for c in range(report.confusion.shape[0]):
        lines.append(
            f"class_{c}: precision={report.precision[c]:.6f} recall={report.recall[c]:.6f} "
            f"f1={report.f1[c]:.6f} support={report.support[c]}"
        )
    if report.zero_support_classes:
        lines.append(f"zero_support_classes={report.zero_support_classes}")
    (out_dir / f"{stem}_metrics.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_eval(args, parser):
    overrides = _parse_overrides(args.set, parser)
    out = Path(args.out)
    _echo_config(args, overrides, out)
    ckpt = load_checkpoint(args.checkpoint)
    windows = _load_windows(args.manifest, _participant_list(args.participants))
    report = evaluate(ckpt, windows)
    _write_report(report, out, "eval")
    print(f"macro F1 = {report.macro_f1:.4f} over {len(windows)} windows")
    return 0


def cmd_lopo(args, parser):
    overrides = _parse_overrides(args.set, parser)
    out = Path(args.out)
    _echo_config(args, overrides, out)
    windows = _load_windows(args.manifest)
    category_labels = None
    if args.category:
        registry = _registry(args)
        category_labels = [lab.id for lab in registry.by_category(args.category)]
    result = lopo_evaluate(
        windows, _model_config(overrides), _train_config(overrides, args.seed),
        category_labels=category_labels, log_dir=out,
    )
    for fold in result.folds:
        _write_report(fold.report, out, f"participant_{fold.participant}")
        print(f"participant {fold.participant}: macro F1 = {fold.report.macro_f1:.4f}")
    summary = {
        "mean_macro_f1": result.mean_macro_f1,
        "per_participant": {str(f.participant): f.report.macro_f1 for f in result.folds},
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    print(f"mean macro F1 = {result.mean_macro_f1:.4f}")
    return 0


def cmd_finetune(args, parser):
    overrides = _parse_overrides(args.set, parser)
    out = Path(args.out)
    _echo_config(args, overrides, out)
    ckpt = load_checkpoint(args.checkpoint)
    windows = _load_windows(args.manifest, participants=[args.participant])
    tune = windows.select(windows.session == args.session)
    hold = windows.select(windows.session != args.session)
    if len(tune) == 0 or len(hold) == 0:
        raise PreconditionError(
            f"participant {args.participant} needs windows both in session {args.session} "
            "and in at least one other session"
        )
    cfg = None
    if overrides.get("train"):
        cfg = _train_config(overrides, args.seed)
    result = fine_tune(ckpt, tune, hold, train_cfg=cfg)
    save_checkpoint(out, result.checkpoint)
    out_dir = out.parent if out.suffix else out
    _write_report(result.before, out_dir, "before")
    _write_report(result.after, out_dir, "after")
    print(f"macro F1 before = {result.before.macro_f1:.4f}, "
          f"after = {result.after.macro_f1:.4f}")
    return 0


def render_pgm(profile_path, channel: int, out_path) -> bytes:
    """Render one channel of a `.wsep` profile as a binary 8-bit PGM.

    Width is the frame count, height the 200 range bins; pixel intensity is
    |value| min-max scaled per image.
    """
    profile = read_wsep(profile_path)
    if not 0 <= channel < profile.channels:
        raise PreconditionError(f"channel {channel} outside [0, {profile.channels})")
    img = np.abs(profile.values[:, channel, :]).T  # (bins, frames)
    lo, hi = img.min(), img.max()
    scaled = np.zeros_like(img) if hi == lo else (img - lo) / (hi - lo)
    pixels = np.round(scaled * 255.0).astype(np.uint8)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    data = header + pixels.tobytes()
    Path(out_path).write_bytes(data)
    return data


def cmd_plot(args, parser):
    overrides = _parse_overrides(args.set, parser)
    out = Path(args.out)
    _echo_config(args, overrides, out)
    render_pgm(args.infile, args.channel, out)
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echogest",
        description="Ultrasonic echo-profile gesture sensing pipeline",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add_set(p):
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                       help="override tx/model/train/sim settings (repeatable)")

    p = sub.add_parser("simulate", help="synthesize a labeled multi-participant dataset")
    p.add_argument("--participants", type=int, required=True)
    p.add_argument("--sessions", type=int, required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--env", default="lab", help="comma list; sessions cycle through it")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--registry", help="JSON label-registry file")
    add_set(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("profile", help="raw 2-mic audio -> .wsep echo profile")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--differential", action="store_true",
                   help="write consecutive-frame differences instead of the raw profile")
    add_set(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("train", help="train a classifier on a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--participants", help="comma list of participant ids to train on")
    add_set(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--participants", help="comma list of participant ids to evaluate")
    add_set(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("lopo", help="leave-one-participant-out evaluation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--category", choices=["gesture", "activity", "head_motion"],
                   help="restrict to one category's labels")
    p.add_argument("--registry", help="JSON label-registry file")
    add_set(p)
    p.set_defaults(func=cmd_lopo)

    p = sub.add_parser("finetune", help="personalize a checkpoint with one session")
    p.add_argument("--manifest", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--participant", type=int, required=True)
    p.add_argument("--session", type=int, default=0, help="session to fine-tune on")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="fine-tuned checkpoint path")
    add_set(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("plot", help="render a .wsep channel as a PGM image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--channel", type=int, default=0)
    p.add_argument("--out", required=True)
    add_set(p)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except EchogestError as exc:
        print(f"echogest {args.cmd}: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"echogest {args.cmd}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
