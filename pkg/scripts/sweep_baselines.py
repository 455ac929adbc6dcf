#!/usr/bin/env python3
"""Random-policy reference statistics across phantom seeds.

Useful for judging learning margins: prints per-seed mean plane reward and
terminal distance for a uniform-random policy, plus the pooled aggregate.
"""

import argparse

import numpy as np

from planenav import phantom, trainer


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, nargs="*", default=[3, 7, 11, 19])
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--episodes", type=int, default=20)
    args = ap.parse_args()

    cfg = trainer.TrainConfig.desk()
    pooled_r, pooled_d = [], []
    for seed in args.seeds:
        vol_pair = phantom.generate(phantom.PhantomSpec(dims=(args.size,) * 3, seed=seed))
        stats = trainer.random_policy_stats(cfg, [vol_pair], episodes=args.episodes, seed=1000 + seed)
        pooled_r.append(stats["mean_r_plane"])
        pooled_d.append(stats["mean_terminal_dist"])
        print(f"phantom seed {seed:3d}: plane reward {stats['mean_r_plane']:+.4f}  "
              f"terminal distance {stats['mean_terminal_dist']:.4f}")
    print(f"pooled: plane reward {np.mean(pooled_r):+.4f}  "
          f"terminal distance {np.mean(pooled_d):.4f}")


if __name__ == "__main__":
    main()
