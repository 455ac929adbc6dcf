#!/usr/bin/env python3
"""End-to-end desk-scale demo: phantom -> training -> evaluation -> overlay.

Takes roughly 15 minutes on a laptop CPU. Outputs land in --out-dir:
checkpoints, report.json, eval summary/episodes/trajectories, terminal
slices, and the mean/std overlay image.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from planenav import evaluate as ev
from planenav import imgio, phantom, trainer
from planenav.volume import save_vvol


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="desk_demo")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--episodes", type=int, default=200)
    ap.add_argument("--eval-runs", type=int, default=100)
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    spec = phantom.PhantomSpec(dims=(32, 32, 32), seed=7)
    vol, labels = phantom.generate(spec)
    save_vvol(vol, out / "phantom.vvol")
    save_vvol(labels, out / "phantom.labels.vvol")

    cfg = trainer.TrainConfig.desk(seed=args.seed, episodes=args.episodes)
    print(f"baseline: random policy over 20 episodes ...")
    baseline = trainer.random_policy_stats(cfg, [(vol, labels)], episodes=20, seed=1234)
    print(f"  mean plane reward {baseline['mean_r_plane']:.4f}, "
          f"mean terminal distance {baseline['mean_terminal_dist']:.4f}")

    print(f"training {cfg.episodes} episodes x {cfg.steps_per_episode} steps "
          f"on {cfg.num_envs} environments ...")
    t0 = time.time()
    report = trainer.train(cfg, [(vol, labels)], out / "train")
    print(f"  done in {(time.time() - t0) / 60:.1f} min; "
          f"final-20 plane reward {np.mean(report.ep_r_plane[-20:]):.4f}, "
          f"terminal distance {np.mean(report.ep_terminal_dist[-20:]):.4f}")

    ckpt = report.checkpoints[-1]
    print(f"evaluating {args.eval_runs} greedy runs ...")
    summary, slices, records = ev.evaluate(
        ckpt, vol, labels, runs=args.eval_runs, seed=args.seed + 1,
        trajectory_path=out / "trajectories.jsonl",
    )
    print(summary.table())
    ev.write_episode_records(out / "episodes.jsonl", records)
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), sort_keys=True, indent=1))

    slice_dir = out / "terminal_slices"
    slice_dir.mkdir(exist_ok=True)
    for i, s in enumerate(slices):
        imgio.write_pgm(slice_dir / f"terminal_{i:03d}.pgm", s)
    imgio.write_ppm(out / "overlay.ppm", ev.overlay(slices))
    print(f"wrote {out / 'overlay.ppm'} (blue = mean, red = 2x std)")


if __name__ == "__main__":
    main()
