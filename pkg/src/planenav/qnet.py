"""Multi-head action-value network with explicit forward/backward passes.

The network is a dense encoder over the flattened frame stack (history is
realized as channel stacking) followed by one linear head of action values
per agent. Gradients are hand-derived so they can be verified against finite
differences; the optimizer is Adam with bias-corrected moments.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .rng import SplitMix64, derive_seed

CHECKPOINT_MAGIC = b"PNQ1"


class CheckpointError(ValueError):
    """Raised when a checkpoint file is malformed or shape-incompatible."""


@dataclass(frozen=True)
class QNetConfig:
    history: int = 10
    obs_size: int = 32
    hidden: tuple[int, ...] = (512, 256)
    num_heads: int = 3
    num_actions: int = 6

    @property
    def input_dim(self) -> int:
        return self.history * self.obs_size * self.obs_size

    def to_dict(self) -> dict:
        return {
            "history": self.history,
            "obs_size": self.obs_size,
            "hidden": list(self.hidden),
            "num_heads": self.num_heads,
            "num_actions": self.num_actions,
        }

    @staticmethod
    def from_dict(d: dict) -> "QNetConfig":
        return QNetConfig(
            history=int(d["history"]),
            obs_size=int(d["obs_size"]),
            hidden=tuple(int(h) for h in d["hidden"]),
            num_heads=int(d["num_heads"]),
            num_actions=int(d["num_actions"]),
        )


class QParams:
    """Parameter tensors in declaration order: per-layer (w, b), then per-head (w, b)."""

    def __init__(self, cfg: QNetConfig, tensors: dict[str, np.ndarray]):
        self.cfg = cfg
        self.tensors = tensors

    @staticmethod
    def tensor_shapes(cfg: QNetConfig) -> list[tuple[str, tuple[int, ...]]]:
        shapes = []
        prev = cfg.input_dim
        for li, width in enumerate(cfg.hidden):
            shapes.append((f"w{li}", (prev, width)))
            shapes.append((f"b{li}", (width,)))
            prev = width
        for h in range(cfg.num_heads):
            shapes.append((f"head_w{h}", (prev, cfg.num_actions)))
            shapes.append((f"head_b{h}", (cfg.num_actions,)))
        return shapes

    @classmethod
    def init(cls, cfg: QNetConfig, seed: int) -> "QParams":
        """Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)); zero biases."""
        rng = SplitMix64(derive_seed(seed, 0x716E6574))  # stream tag: 'qnet'
        tensors = {}
        for name, shape in cls.tensor_shapes(cfg):
            if "w" in name:
                fan_in, fan_out = shape
                bound = np.sqrt(6.0 / (fan_in + fan_out))
                vals = bound * (2.0 * rng.uniform_array(fan_in * fan_out) - 1.0)
                tensors[name] = vals.reshape(shape)
            else:
                tensors[name] = np.zeros(shape)
        return cls(cfg, tensors)

    @classmethod
    def zeros(cls, cfg: QNetConfig) -> "QParams":
        return cls(cfg, {n: np.zeros(s) for n, s in cls.tensor_shapes(cfg)})

    def copy(self) -> "QParams":
        return QParams(self.cfg, {k: v.copy() for k, v in self.tensors.items()})

    def names(self) -> list[str]:
        return [n for n, _ in self.tensor_shapes(self.cfg)]


def _flatten(x: np.ndarray, cfg: QNetConfig) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    expected = (cfg.history, cfg.obs_size, cfg.obs_size)
    if x.shape[1:] != expected:
        raise ValueError(f"expected input shape (B, {expected}), got {x.shape}")
    return x.reshape(x.shape[0], -1)


def _forward_cached(params: QParams, x: np.ndarray):
    cfg = params.cfg
    t = params.tensors
    flat = _flatten(x, cfg)
    activations = [flat]
    pre = []
    a = flat
    for li in range(len(cfg.hidden)):
        z = a @ t[f"w{li}"] + t[f"b{li}"]
        pre.append(z)
        a = np.maximum(z, 0.0)
        activations.append(a)
    q = np.stack(
        [a @ t[f"head_w{h}"] + t[f"head_b{h}"] for h in range(cfg.num_heads)],
        axis=1,
    )  # (B, heads, actions)
    return q, (activations, pre)


def forward(params: QParams, x: np.ndarray) -> np.ndarray:
    """Q-values for a batch of frame stacks, shape (B, num_heads, num_actions)."""
    q, _ = _forward_cached(params, x)
    if not np.isfinite(q).all():
        raise FloatingPointError("non-finite Q-values in forward pass")
    return q


def double_q_targets(online: QParams, target: QParams, next_stacks: np.ndarray,
                     rewards: np.ndarray, dones: np.ndarray, gamma: float) -> np.ndarray:
    """Per-head TD targets: the online net picks the next action, the target
    net evaluates it. Shape (B, num_heads)."""
    q_online = forward(online, next_stacks)
    q_target = forward(target, next_stacks)
    a_star = np.argmax(q_online, axis=2)  # ties resolve to the lowest index
    b_idx = np.arange(q_online.shape[0])[:, None]
    h_idx = np.arange(online.cfg.num_heads)[None, :]
    boot = q_target[b_idx, h_idx, a_star]
    dones = np.asarray(dones, dtype=np.float64).reshape(-1, 1)
    return np.asarray(rewards, dtype=np.float64) + gamma * (1.0 - dones) * boot


def _huber(r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Huber loss (delta=1) and its derivative, elementwise."""
    small = np.abs(r) <= 1.0
    loss = np.where(small, 0.5 * r * r, np.abs(r) - 0.5)
    grad = np.where(small, r, np.sign(r))
    return loss, grad


def loss_and_grads(params: QParams, stacks: np.ndarray, actions: np.ndarray,
                   targets: np.ndarray, is_weights: np.ndarray):
    """Weighted Huber TD loss, exact gradients, and per-transition mean |td|.

    loss = mean_b w_b * mean_h huber(q[b, h, a(b, h)] - y[b, h])
    """
    cfg = params.cfg
    t = params.tensors
    q, (activations, pre) = _forward_cached(params, x=stacks)
    if not np.isfinite(q).all():
        raise FloatingPointError("non-finite values in forward pass")
    B = q.shape[0]
    actions = np.asarray(actions, dtype=np.int64)
    b_idx = np.arange(B)[:, None]
    h_idx = np.arange(cfg.num_heads)[None, :]
    taken = q[b_idx, h_idx, actions]  # (B, heads)
    residual = taken - np.asarray(targets, dtype=np.float64)
    hloss, hgrad = _huber(residual)
    w = np.asarray(is_weights, dtype=np.float64)
    loss = float((w * hloss.mean(axis=1)).mean())
    td_abs = np.abs(residual).mean(axis=1)

    dq = np.zeros_like(q)
    dq[b_idx, h_idx, actions] = hgrad * (w[:, None] / (cfg.num_heads * B))

    grads = {}
    a_last = activations[-1]
    d_a = np.zeros_like(a_last)
    for h in range(cfg.num_heads):
        grads[f"head_w{h}"] = a_last.T @ dq[:, h, :]
        grads[f"head_b{h}"] = dq[:, h, :].sum(axis=0)
        d_a = d_a + dq[:, h, :] @ t[f"head_w{h}"].T
    for li in reversed(range(len(cfg.hidden))):
        dz = d_a * (pre[li] > 0.0)
        grads[f"w{li}"] = activations[li].T @ dz
        grads[f"b{li}"] = dz.sum(axis=0)
        if li > 0:
            d_a = dz @ t[f"w{li}"].T
    return loss, grads, td_abs


@dataclass
class OptimState:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: QParams, lr: float = 1e-4) -> "OptimState":
        st = cls(lr=lr)
        for name, arr in params.tensors.items():
            st.m[name] = np.zeros_like(arr)
            st.v[name] = np.zeros_like(arr)
        return st


def adam_step(params: QParams, grads: dict, opt: OptimState) -> None:
    """One bias-corrected Adam update, in place."""
    opt.step += 1
    c1 = 1.0 - opt.beta1**opt.step
    c2 = 1.0 - opt.beta2**opt.step
    for name, g in grads.items():
        m = opt.m[name] = opt.beta1 * opt.m[name] + (1.0 - opt.beta1) * g
        v = opt.v[name] = opt.beta2 * opt.v[name] + (1.0 - opt.beta2) * g * g
        params.tensors[name] -= opt.lr * (m / c1) / (np.sqrt(v / c2) + opt.eps)


def soft_update(target: QParams, online: QParams, tau: float) -> None:
    """Move the target a fraction tau toward the online parameters, in place."""
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    for name, arr in target.tensors.items():
        arr *= 1.0 - tau
        arr += tau * online.tensors[name]


def save_checkpoint(path, params: QParams) -> None:
    """Versioned binary: magic, config JSON, then tensors as f32 little-endian."""
    cfg_json = json.dumps(params.cfg.to_dict(), sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(cfg_json)))
        f.write(cfg_json)
        for name, _ in QParams.tensor_shapes(params.cfg):
            f.write(params.tensors[name].astype("<f4").tobytes())


def load_checkpoint(path) -> QParams:
    raw = open(path, "rb").read()
    if raw[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad checkpoint magic {raw[:4]!r}")
    (cfg_len,) = struct.unpack_from("<I", raw, 4)
    try:
        cfg = QNetConfig.from_dict(json.loads(raw[8 : 8 + cfg_len].decode()))
    except (ValueError, KeyError) as e:
        raise CheckpointError(f"{path}: unreadable config block ({e})") from e
    offset = 8 + cfg_len
    tensors = {}
    for name, shape in QParams.tensor_shapes(cfg):
        n = int(np.prod(shape))
        end = offset + 4 * n
        if end > len(raw):
            raise CheckpointError(f"{path}: truncated tensor {name}")
        tensors[name] = np.frombuffer(raw[offset:end], dtype="<f4").astype(np.float64).reshape(shape)
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")
    return QParams(cfg, tensors)
