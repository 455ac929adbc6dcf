"""Training loop: synchronized parallel environments, epsilon-greedy rollout,
per-environment prioritized replay, Double-Q targets, Adam updates, soft
target maintenance, and deterministic checkpoints/reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import qnet
from .env import EnvConfig, NavEnv, NUM_ACTIONS, NUM_AGENTS
from .phantom import goal_plane
from .qnet import OptimState, QNetConfig, QParams
from .replay import PerBuffer, Transition
from .rng import SplitMix64, derive_seed
from .volume import IntensityWindow


class TrainingDivergedError(RuntimeError):
    """Raised when the loss turns non-finite; a diagnostic dump is written first."""


@dataclass
class TrainConfig:
    episodes: int = 2000
    steps_per_episode: int = 125
    num_envs: int = 15
    train_every: int = 15
    batch_size: int = 8
    history: int = 10
    gamma: float = 0.999
    lr: float = 1e-4
    eps_start: float = 1.0
    eps_end: float = 0.005
    beta_start: float = 0.4
    beta_end: float = 1.0
    tau: float = 0.01
    capacity: int = 25000
    alpha: float = 0.6
    priority_eps: float = 1e-6
    seed: int = 0
    obs_size: int = 32
    hidden: tuple[int, ...] = (512, 256)
    shaping_scale: float = 0.01
    osc_window: int = 20
    osc_threshold: int = 3
    checkpoint_every: int = 250
    randomize_window: bool = False
    # Appendix-style literal target mixing keeps most weight on the online
    # net; the default is the conventional slow-target form.
    literal_target_update: bool = False

    def __post_init__(self):
        if min(self.episodes, self.steps_per_episode, self.num_envs,
               self.train_every, self.batch_size, self.history) < 1:
            raise ValueError("count-valued config fields must be positive")
        if self.eps_end > self.eps_start:
            raise ValueError("eps_end must not exceed eps_start")
        if self.beta_end < self.beta_start:
            raise ValueError("beta_end must not fall below beta_start")

    @property
    def total_steps(self) -> int:
        return self.episodes * self.steps_per_episode * self.num_envs

    @classmethod
    def desk(cls, **overrides) -> "TrainConfig":
        """Laptop-scale profile: small volumes, short runs, thinner network."""
        base = dict(
            episodes=200, steps_per_episode=64, num_envs=4, train_every=5,
            batch_size=32, history=4, gamma=0.9, lr=3e-4, obs_size=32,
            hidden=(256, 128), checkpoint_every=100,
        )
        base.update(overrides)
        return cls(**base)

    def env_config(self) -> EnvConfig:
        return EnvConfig(
            shaping_scale=self.shaping_scale,
            max_steps=self.steps_per_episode,
            osc_window=self.osc_window,
            osc_threshold=self.osc_threshold,
            obs_size=self.obs_size,
            history=self.history,
        )

    def qnet_config(self) -> QNetConfig:
        return QNetConfig(history=self.history, obs_size=self.obs_size, hidden=self.hidden)

    def to_file(self, path) -> None:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name}={v}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        """Parse a flat key=value file; unknown keys are rejected."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for raw in Path(path).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key not in known:
                raise ValueError(f"unknown config key {key!r}")
            kwargs[key] = _parse_field(known[key].type, value)
        return cls(**kwargs)


def _parse_field(type_name: str, value: str):
    if type_name == "int":
        return int(value)
    if type_name == "float":
        return float(value)
    if type_name == "bool":
        return value.lower() in ("1", "true", "yes")
    if type_name.startswith("tuple"):
        return tuple(int(x) for x in value.split(","))
    return value


def epsilon(t: int, total: int, cfg: TrainConfig) -> float:
    """Exponential exploration decay from eps_start to eps_end over `total` steps."""
    ratio = cfg.eps_end / cfg.eps_start
    return max(cfg.eps_end, cfg.eps_start * ratio ** (t / total))


def beta(t: int, total: int, cfg: TrainConfig) -> float:
    """Exponential bias-correction ramp from beta_start to beta_end."""
    ratio = cfg.beta_end / cfg.beta_start
    return min(cfg.beta_end, cfg.beta_start * ratio ** (t / total))


def select_actions(q: np.ndarray, eps: float, rng: SplitMix64) -> np.ndarray:
    """Independent epsilon-greedy per head; draws consumed in head order."""
    actions = np.empty(NUM_AGENTS, dtype=np.int64)
    for agent in range(NUM_AGENTS):
        if rng.uniform() < eps:
            actions[agent] = rng.randrange(NUM_ACTIONS)
        else:
            actions[agent] = int(np.argmax(q[agent]))  # ties -> lowest index
    return actions


def intensity_randomization_hook(env: NavEnv, rng: SplitMix64) -> None:
    """Randomize the working intensity window ahead of a reset."""
    lo = rng.randrange(41)
    width = 160 + rng.randrange(96)
    env.set_intensity_window(IntensityWindow(lo, min(255, lo + width)))


@dataclass
class TrainReport:
    config: dict
    ep_r_plane: list = field(default_factory=list)
    ep_r_anat: list = field(default_factory=list)
    ep_r_area: list = field(default_factory=list)
    ep_reward: list = field(default_factory=list)
    ep_terminal_dist: list = field(default_factory=list)
    ep_length: list = field(default_factory=list)
    eps_trace: list = field(default_factory=list)
    beta_trace: list = field(default_factory=list)
    losses: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n")

    @staticmethod
    def load(path) -> "TrainReport":
        return TrainReport(**json.loads(Path(path).read_text()))


class _EpisodeTally:
    """Accumulates per-step reward components over one episode."""

    def __init__(self):
        self.r_plane = []
        self.r_anat = []
        self.r_area = []
        self.reward = []
        self.terminal_dist = {}

    def add(self, env_idx: int, result) -> None:
        info = result.info
        self.r_plane.append(info["r_plane"])
        self.r_anat.append(info["r_anat"])
        self.r_area.append(info["r_area"])
        self.reward.append(float(result.rewards.mean()))
        self.terminal_dist[env_idx] = info["dist"]


def train(cfg: TrainConfig, volumes, out_dir) -> TrainReport:
    """Run the full training recipe over the given (Volume, LabelVolume) pairs.

    Environments advance in lockstep; one optimizer step fires per
    `train_every` accumulated env steps, drawing the batch split across the
    per-environment buffers. Fully deterministic for a fixed config.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not volumes:
        raise ValueError("need at least one training volume")

    env_cfg = cfg.env_config()
    envs = []
    for i in range(cfg.num_envs):
        vol, labels = volumes[i % len(volumes)]
        envs.append(NavEnv(vol, labels, goal_plane(labels), env_cfg))

    params = QParams.init(cfg.qnet_config(), cfg.seed)
    target = params.copy()
    opt = OptimState.for_params(params, lr=cfg.lr)
    buffers = [
        PerBuffer(cfg.capacity, cfg.alpha, cfg.priority_eps, seed=derive_seed(cfg.seed, 2, i))
        for i in range(cfg.num_envs)
    ]
    act_rngs = [SplitMix64(derive_seed(cfg.seed, 3, i)) for i in range(cfg.num_envs)]
    win_rngs = [SplitMix64(derive_seed(cfg.seed, 5, i)) for i in range(cfg.num_envs)]

    report = TrainReport(config=_config_echo(cfg))
    total = cfg.total_steps
    tau_eff = (1.0 - cfg.tau) if cfg.literal_target_update else cfg.tau
    global_t = 0
    pending = 0
    opt_steps = 0

    for ep in range(cfg.episodes):
        for i, env in enumerate(envs):
            if cfg.randomize_window:
                intensity_randomization_hook(env, win_rngs[i])
            env.reset(derive_seed(cfg.seed, 4, ep, i))
        tally = _EpisodeTally()
        report.eps_trace.append(epsilon(global_t, total, cfg))
        steps_this_ep = 0

        for _ in range(cfg.steps_per_episode):
            active = [i for i in range(cfg.num_envs) if not envs[i].done]
            if not active:
                break
            eps_t = epsilon(global_t, total, cfg)
            stacks = np.stack([envs[i].obs_stack() for i in active])
            q = qnet.forward(params, stacks)
            for k, i in enumerate(active):
                stack_i = stacks[k].astype(np.float32)
                actions = select_actions(q[k], eps_t, act_rngs[i])
                result = envs[i].step(actions)
                buffers[i].push(Transition(
                    obs_hist=stack_i,
                    actions=actions,
                    rewards=result.rewards.astype(np.float32),
                    next_obs=result.observation.astype(np.float32),
                    done=result.done,
                ))
                tally.add(i, result)
            global_t += len(active)
            steps_this_ep += len(active)
            pending += len(active)
            while pending >= cfg.train_every:
                pending -= cfg.train_every
                loss = _optimize(cfg, params, target, opt, buffers, opt_steps,
                                 beta(global_t, total, cfg), tau_eff)
                if loss is None:
                    continue
                if not np.isfinite(loss):
                    _dump_diagnostics(out_dir, cfg, ep, opt_steps, report)
                    raise TrainingDivergedError(
                        f"non-finite loss at episode {ep}, optimizer step {opt_steps}"
                    )
                report.losses.append(loss)
                report.beta_trace.append(beta(global_t, total, cfg))
                opt_steps += 1

        report.ep_r_plane.append(float(np.mean(tally.r_plane)))
        report.ep_r_anat.append(float(np.mean(tally.r_anat)))
        report.ep_r_area.append(float(np.mean(tally.r_area)))
        report.ep_reward.append(float(np.mean(tally.reward)))
        report.ep_terminal_dist.append(float(np.mean(list(tally.terminal_dist.values()))))
        report.ep_length.append(steps_this_ep / cfg.num_envs)

        if (ep + 1) % cfg.checkpoint_every == 0:
            path = out_dir / f"checkpoint_ep{ep + 1:05d}.qnp"
            qnet.save_checkpoint(path, params)
            report.checkpoints.append(str(path))

    final = out_dir / "checkpoint_final.qnp"
    qnet.save_checkpoint(final, params)
    report.checkpoints.append(str(final))
    report.save(out_dir / "report.json")
    return report


def _config_echo(cfg: TrainConfig) -> dict:
    d = {}
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        d[f.name] = list(v) if isinstance(v, tuple) else v
    return d


def _batch_quota(batch_size: int, buffers, opt_steps: int) -> list[int]:
    """Split the batch across buffers: floor share each, remainder round-robin
    (rotating with the optimizer step), skipping empty buffers."""
    n = len(buffers)
    quota = [batch_size // n] * n
    for j in range(batch_size % n):
        quota[(opt_steps + j) % n] += 1
    extra = 0
    nonempty = [i for i in range(n) if len(buffers[i]) > 0]
    if not nonempty:
        return [0] * n
    for i in range(n):
        if len(buffers[i]) == 0:
            extra += quota[i]
            quota[i] = 0
    for j in range(extra):
        quota[nonempty[(opt_steps + j) % len(nonempty)]] += 1
    return quota


def _optimize(cfg, params, target, opt, buffers, opt_steps, beta_t, tau_eff):
    quota = _batch_quota(cfg.batch_size, buffers, opt_steps)
    if sum(quota) == 0:
        return None
    batches = [(i, buffers[i].sample(quota[i], beta_t)) for i in range(len(buffers)) if quota[i] > 0]
    transitions = [t for _, b in batches for t in b.transitions]
    weights = np.concatenate([b.weights for _, b in batches])
    stacks = np.stack([t.obs_hist for t in transitions])
    next_stacks = np.stack([t.next_hist() for t in transitions])
    actions = np.stack([t.actions for t in transitions])
    rewards = np.stack([t.rewards for t in transitions])
    dones = np.array([t.done for t in transitions], dtype=np.float64)

    targets = qnet.double_q_targets(params, target, next_stacks, rewards, dones, cfg.gamma)
    loss, grads, td_abs = qnet.loss_and_grads(params, stacks, actions, targets, weights)
    qnet.adam_step(params, grads, opt)
    offset = 0
    for i, b in batches:
        k = len(b.indices)
        buffers[i].update_priorities(b.indices, td_abs[offset : offset + k])
        offset += k
    qnet.soft_update(target, params, tau_eff)
    return loss


def _dump_diagnostics(out_dir: Path, cfg, episode, opt_steps, report) -> None:
    dump = {
        "episode": episode,
        "optimizer_step": opt_steps,
        "recent_losses": report.losses[-50:],
        "config": _config_echo(cfg),
    }
    (out_dir / "divergence_dump.json").write_text(json.dumps(dump, sort_keys=True, indent=1))


def random_policy_stats(cfg: TrainConfig, volumes, episodes: int, seed: int) -> dict:
    """Rollout statistics for a uniform-random policy under the same protocol.

    Returns per-episode mean plane rewards and terminal distances aggregated
    over all environments, for use as a learning baseline.
    """
    env_cfg = cfg.env_config()
    envs = []
    for i in range(cfg.num_envs):
        vol, labels = volumes[i % len(volumes)]
        envs.append(NavEnv(vol, labels, goal_plane(labels), env_cfg))
    rngs = [SplitMix64(derive_seed(seed, 13, i)) for i in range(cfg.num_envs)]
    ep_r_plane = []
    ep_terminal = []
    for ep in range(episodes):
        for i, env in enumerate(envs):
            env.reset(derive_seed(seed, 14, ep, i))
        r_plane = []
        terminal = {}
        for _ in range(cfg.steps_per_episode):
            active = [i for i in range(cfg.num_envs) if not envs[i].done]
            if not active:
                break
            for i in active:
                actions = np.array([rngs[i].randrange(NUM_ACTIONS) for _ in range(NUM_AGENTS)])
                result = envs[i].step(actions)
                r_plane.append(result.info["r_plane"])
                terminal[i] = result.info["dist"]
        ep_r_plane.append(float(np.mean(r_plane)))
        ep_terminal.append(float(np.mean(list(terminal.values()))))
    return {
        "ep_r_plane": ep_r_plane,
        "ep_terminal_dist": ep_terminal,
        "mean_r_plane": float(np.mean(ep_r_plane)),
        "mean_terminal_dist": float(np.mean(ep_terminal)),
    }
