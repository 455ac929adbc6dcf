"""Command-line entry points.

Subcommands: gen-phantom, slice, train, eval, overlay, augment.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluate as ev
from . import geometry, imgio, phantom, trainer
from .volume import (
    IntensityWindow,
    LabelVolume,
    add_noise,
    apply_window,
    load_vvol,
    save_vvol,
    sg_smooth_z,
)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planenav")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-phantom", help="generate a paired intensity/label phantom")
    g.add_argument("--out", required=True, help="output stem; writes <out>.vvol and <out>.labels.vvol")
    g.add_argument("--size", type=int, default=32)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--jitter", type=float, default=0.10)

    s = sub.add_parser("slice", help="extract an oblique slice as PGM")
    s.add_argument("--volume", required=True)
    s.add_argument("--labels", default=None, help="optional label volume; adds <out stem>.labels.pgm")
    s.add_argument("--plane", required=True, help="a0,a1,a2,a3 (canonicalized before use)")
    s.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train from a key=value config file")
    t.add_argument("--config", required=True)
    t.add_argument("--out-dir", required=True)
    t.add_argument("--volumes", nargs="*", default=None,
                   help="intensity .vvol paths; labels expected at <stem>.labels.vvol "
                        "(default: one generated phantom)")
    t.add_argument("--phantom-size", type=int, default=32,
                   help="edge length of the default generated phantom")

    e = sub.add_parser("eval", help="evaluate a checkpoint on one volume")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--volume", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--runs", type=int, default=100)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out-dir", required=True)

    o = sub.add_parser("overlay", help="mean/std overlay of terminal slices")
    o.add_argument("--slices-dir", required=True)
    o.add_argument("--out", required=True)

    a = sub.add_parser("augment", help="window / smooth / noise a volume")
    a.add_argument("--volume", required=True)
    a.add_argument("--window", default=None, help="lo,hi intensity window")
    a.add_argument("--sg", action="store_true", help="Savitzky-Golay smoothing along z")
    a.add_argument("--noise", type=float, default=None, help="Gaussian noise std-dev")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", required=True)
    return p


def _phantom_paths(stem: str) -> tuple[Path, Path]:
    if stem.endswith(".vvol"):
        stem = stem[: -len(".vvol")]
    return Path(stem + ".vvol"), Path(stem + ".labels.vvol")


def _cmd_gen_phantom(args) -> int:
    spec = phantom.PhantomSpec(dims=(args.size,) * 3, seed=args.seed, jitter=args.jitter)
    vol, labels = phantom.generate(spec)
    vol_path, label_path = _phantom_paths(args.out)
    vol_path.parent.mkdir(parents=True, exist_ok=True)
    save_vvol(vol, vol_path)
    save_vvol(labels, label_path)
    print(f"wrote {vol_path} and {label_path}")
    return 0


def _cmd_slice(args) -> int:
    vol = load_vvol(args.volume)
    coeffs = [float(x) for x in args.plane.split(",")]
    plane = geometry.Plane.canonical(coeffs)
    grid = geometry.slice_grid(plane, vol.dims)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    imgio.write_pgm(out, geometry.sample_slice(vol, grid))
    if args.labels:
        label_img = geometry.sample_slice(load_vvol(args.labels), grid)
        imgio.write_pgm(out.with_suffix(".labels.pgm"), label_img)
    return 0


def _load_pair(path: str):
    vol = load_vvol(path)
    label_path = Path(path).with_suffix(".labels.vvol")
    labels = load_vvol(label_path)
    if not isinstance(labels, LabelVolume):
        raise ValueError(f"{label_path} is not a label volume")
    return vol, labels


def _cmd_train(args) -> int:
    cfg = trainer.TrainConfig.from_file(args.config)
    if args.volumes:
        volumes = [_load_pair(p) for p in args.volumes]
    else:
        spec = phantom.PhantomSpec(dims=(args.phantom_size,) * 3, seed=cfg.seed)
        volumes = [phantom.generate(spec)]
    report = trainer.train(cfg, volumes, args.out_dir)
    print(f"trained {cfg.episodes} episodes; report at {Path(args.out_dir) / 'report.json'}")
    print(f"final checkpoint: {report.checkpoints[-1]}")
    return 0


def _cmd_eval(args) -> int:
    vol = load_vvol(args.volume)
    labels = load_vvol(args.labels)
    if not isinstance(labels, LabelVolume):
        raise ValueError(f"{args.labels} is not a label volume")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary, slices, records = ev.evaluate(
        args.checkpoint, vol, labels, runs=args.runs, seed=args.seed,
        trajectory_path=out_dir / "trajectories.jsonl",
    )
    ev.write_episode_records(out_dir / "episodes.jsonl", records)
    (out_dir / "summary.json").write_text(
        json.dumps(summary.to_dict(), sort_keys=True, indent=1) + "\n"
    )
    for i, s in enumerate(slices):
        imgio.write_pgm(out_dir / f"terminal_{i:03d}.pgm", s)
    print(summary.table())
    return 0


def _cmd_overlay(args) -> int:
    paths = sorted(Path(args.slices_dir).glob("*.pgm"))
    if not paths:
        raise FileNotFoundError(f"no .pgm slices in {args.slices_dir}")
    slices = [imgio.read_pgm(p) for p in paths]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    imgio.write_ppm(out, ev.overlay(slices))
    print(f"wrote {out} from {len(slices)} slices")
    return 0


def _cmd_augment(args) -> int:
    vol = load_vvol(args.volume)
    if args.window:
        lo, hi = (int(x) for x in args.window.split(","))
        vol = apply_window(vol, IntensityWindow(lo, hi))
    if args.sg:
        vol = sg_smooth_z(vol)
    if args.noise is not None:
        vol = add_noise(vol, args.noise, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_vvol(vol, out)
    return 0


_COMMANDS = {
    "gen-phantom": _cmd_gen_phantom,
    "slice": _cmd_slice,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "overlay": _cmd_overlay,
    "augment": _cmd_augment,
}


def cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except Exception as e:  # runtime failure -> exit 1 with a message
        print(f"planenav: error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
