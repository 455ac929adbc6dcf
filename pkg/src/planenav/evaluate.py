"""Evaluation rollouts, summary aggregation, and terminal-plane overlays."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import qnet
from .env import EnvConfig, NavEnv, step_record
from .phantom import TISSUE_LABELS, centroid, goal_plane
from .geometry import plane_distance, plane_from_points
from .rng import SplitMix64, derive_seed
from .trainer import select_actions
from .volume import LabelVolume, Volume, round_half_up

GREEDY_EPSILON = 0.005


@dataclass
class EvalSummary:
    runs: int
    r_plane_mean: float
    r_plane_std: float
    r_anat_mean: float
    r_anat_std: float
    terminal_dist_mean: float
    terminal_dist_std: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def table(self) -> str:
        rows = [
            ("plane distance reward", self.r_plane_mean, self.r_plane_std),
            ("anatomical reward", self.r_anat_mean, self.r_anat_std),
            ("distance from goal", self.terminal_dist_mean, self.terminal_dist_std),
        ]
        lines = [f"runs: {self.runs}"]
        for name, mean, std in rows:
            lines.append(f"{name:>24s}: {mean:.6g} +- {std:.6g}")
        return "\n".join(lines)


def summarize(episode_records: list[dict]) -> EvalSummary:
    """Aggregate per-episode records into mean +- std (population std)."""
    r_plane = np.array([r["r_plane_mean"] for r in episode_records])
    r_anat = np.array([r["r_anat_mean"] for r in episode_records])
    dist = np.array([r["terminal_dist"] for r in episode_records])
    return EvalSummary(
        runs=len(episode_records),
        r_plane_mean=float(r_plane.mean()),
        r_plane_std=float(r_plane.std()),
        r_anat_mean=float(r_anat.mean()),
        r_anat_std=float(r_anat.std()),
        terminal_dist_mean=float(dist.mean()),
        terminal_dist_std=float(dist.std()),
    )


def evaluate(checkpoint, volume: Volume, labels: LabelVolume, runs: int = 100,
             seed: int = 0, env_cfg: EnvConfig | None = None, policy=None,
             trajectory_path=None):
    """Run greedy episodes from seeded resets.

    Returns (summary, terminal_slices, episode_records); terminal slices are
    full-resolution uint8 intensity slices of each episode's final plane.
    `policy`, when given, overrides the checkpoint policy (signature:
    policy(env, obs_stack, rng) -> 3 action indices). `trajectory_path`
    dumps one JSONL record per step for debugging.
    """
    params = qnet.load_checkpoint(checkpoint) if policy is None else None
    if env_cfg is None:
        cfg_src = params.cfg if params is not None else qnet.QNetConfig()
        env_cfg = EnvConfig(obs_size=cfg_src.obs_size, history=cfg_src.history)
    env = NavEnv(volume, labels, goal_plane(labels), env_cfg)
    records = []
    slices = []
    trajectory = open(trajectory_path, "w") if trajectory_path else None
    for run in range(runs):
        rng = SplitMix64(derive_seed(seed, 21, run))
        env.reset(derive_seed(seed, 20, run))
        r_plane = []
        r_anat = []
        last_info = None
        while not env.done:
            stack = env.obs_stack()
            if policy is None:
                q = qnet.forward(params, stack[None])[0]
                actions = select_actions(q, GREEDY_EPSILON, rng)
            else:
                actions = policy(env, stack, rng)
            result = env.step(actions)
            if trajectory is not None:
                record = {"run": run, **step_record(actions, result)}
                trajectory.write(json.dumps(record, sort_keys=True) + "\n")
            r_plane.append(result.info["r_plane"])
            r_anat.append(result.info["r_anat"])
            last_info = result.info
        records.append({
            "run": run,
            "steps": last_info["steps"],
            "r_plane_mean": float(np.mean(r_plane)),
            "r_anat_mean": float(np.mean(r_anat)),
            "terminal_dist": float(last_info["dist"]),
            "terminal_plane": last_info["plane"],
        })
        slices.append(env.render_slice())
    if trajectory is not None:
        trajectory.close()
    return summarize(records), slices, records


def overlay(slices: list[np.ndarray]) -> np.ndarray:
    """Terminal-plane consistency image: per-pixel mean on blue, doubled
    std on red (clamped), green zero."""
    if not slices:
        raise ValueError("need at least one slice")
    stack = np.stack([np.asarray(s, dtype=np.float64) for s in slices])
    if any(s.shape != slices[0].shape for s in slices):
        raise ValueError("slices must share one shape")
    mean = stack.mean(axis=0)
    std = stack.std(axis=0)
    out = np.zeros((*mean.shape, 3), dtype=np.uint8)
    out[..., 2] = round_half_up(mean).astype(np.uint8)
    out[..., 0] = round_half_up(np.minimum(255.0, 2.0 * std)).astype(np.uint8)
    return out


def centroid_oracle_distance(labels: LabelVolume, tissue=TISSUE_LABELS) -> float:
    """Terminal distance of the plug-in policy that lands the agents exactly
    on the three structure centroids."""
    cents = [centroid(labels, lbl) for lbl in tissue]
    return plane_distance(plane_from_points(*cents), goal_plane(labels, tissue))


def write_episode_records(path, records: list[dict]) -> None:
    with open(path, "w") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True) + "\n")


def read_episode_records(path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
