"""Three-agent episodic environment over a labeled voxel volume.

Each agent occupies an integer voxel position and moves one voxel per step;
the triangle they span defines the current view plane. Rewards score progress
of that plane toward a goal plane (coefficient distance, tissue pixel count,
triangle area) plus a per-agent boundary penalty. Episodes end on a step
horizon or when the same configuration recurs more than `osc_threshold` times
within the last `osc_window` visited states.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .geometry import CollinearPointsError, Plane
from .rng import SplitMix64
from .volume import IntensityWindow, LabelVolume, Volume, apply_window

ACTION_NAMES = ("up", "down", "left", "right", "forward", "backward")
# up/down step -y/+y, left/right step -x/+x, forward/backward step +z/-z.
ACTION_VECTORS = np.array(
    [[0, -1, 0], [0, 1, 0], [-1, 0, 0], [1, 0, 0], [0, 0, 1], [0, 0, -1]],
    dtype=np.int64,
)
NUM_ACTIONS = 6
NUM_AGENTS = 3

_MIN_START_AREA = 1.0
_START_AREA_TRIES = 64


class EpisodeFinishedError(RuntimeError):
    """Raised when stepping an environment whose episode already ended."""


@dataclass(frozen=True)
class EnvConfig:
    tissue_labels: tuple[int, ...] = (1, 2, 3)
    shaping_scale: float = 0.01
    max_steps: int = 125
    osc_window: int = 20
    osc_threshold: int = 3
    tie_tol: float = 1e-12
    obs_size: int = 32
    history: int = 10

    def __post_init__(self):
        if self.shaping_scale <= 0:
            raise ValueError("shaping_scale must be > 0")
        if self.osc_window <= self.osc_threshold:
            raise ValueError("osc_window must exceed osc_threshold")


@dataclass(frozen=True)
class PlaneMetrics:
    """Reward-relevant summary of one agent configuration."""

    dist: float
    tissue: int
    area: float
    degenerate: bool = False


@dataclass
class StepResult:
    observation: np.ndarray  # (obs_size, obs_size) float in [0, 1]
    rewards: np.ndarray  # (3,)
    done: bool
    info: dict = field(default_factory=dict)


def _sign(delta: float, tol: float) -> float:
    if delta > tol:
        return 1.0
    if delta < -tol:
        return -1.0
    return 0.0


def compute_rewards(prev: PlaneMetrics, cur: PlaneMetrics, oob, cfg: EnvConfig) -> np.ndarray:
    """Per-agent rewards; all terms are shared except the boundary penalty.

    A degenerate (collinear) configuration keeps the previous plane, so its
    plane term is 0, and its area term is forced to -1.
    """
    if cur.degenerate:
        r_plane = 0.0
        r_area = -1.0
    else:
        r_plane = _sign(prev.dist - cur.dist, cfg.tie_tol)
        r_area = _sign(cur.area - prev.area, cfg.tie_tol)
    r_anat = _sign(float(cur.tissue - prev.tissue), cfg.tie_tol)
    shared = r_plane + r_anat + cfg.shaping_scale * r_area
    oob = np.asarray(oob, dtype=bool)
    return shared - cfg.shaping_scale * oob.astype(np.float64)


def oscillation_done(history, window: int, threshold: int) -> bool:
    """True iff some configuration occurs more than `threshold` times among
    the last `window` visited states (current one included)."""
    recent = list(history)[-window:]
    if not recent:
        return False
    _, count = Counter(recent).most_common(1)[0]
    return count > threshold


def step_record(actions, result: "StepResult") -> dict:
    """Flatten one step into a JSON-ready trajectory record (for JSONL dumps)."""
    info = result.info
    return {
        "actions": [ACTION_NAMES[int(a)] for a in actions],
        "positions": info["positions"],
        "rewards": [float(r) for r in result.rewards],
        "r_plane": info["r_plane"],
        "r_anat": info["r_anat"],
        "r_area": info["r_area"],
        "oob": info["oob"],
        "plane": info["plane"],
        "dist": info["dist"],
        "degenerate": info["degenerate"],
        "done": result.done,
    }


def average_pool(img: np.ndarray, out_size: int) -> np.ndarray:
    """Mean-pool a square image to out_size x out_size (area binning)."""
    n = img.shape[0]
    if n == out_size:
        return img.astype(np.float64)
    edges = [min(int(np.floor(k * n / out_size)), n - 1) for k in range(out_size)] + [n]
    out = np.empty((out_size, out_size))
    for j in range(out_size):
        rows = img[edges[j] : max(edges[j] + 1, edges[j + 1])]
        for i in range(out_size):
            out[j, i] = rows[:, edges[i] : max(edges[i] + 1, edges[i + 1])].mean()
    return out


class NavEnv:
    """The three-agent plane-search environment bound to one volume."""

    def __init__(self, volume: Volume, labels: LabelVolume, goal: Plane, cfg: EnvConfig = EnvConfig()):
        if volume.dims != labels.dims:
            raise ValueError(f"volume dims {volume.dims} != label dims {labels.dims}")
        self.base_volume = volume
        self.active_volume = volume
        self.labels = labels
        self.goal = goal
        self.cfg = cfg
        self.dims = volume.dims
        self._positions = None
        self._done = True
        self._steps = 0
        self._plane = None  # last valid plane
        self._metrics = None
        self._visit_history = deque(maxlen=cfg.osc_window)
        self._frames = deque(maxlen=cfg.history)

    # -- volume augmentation hooks -------------------------------------------------

    def set_intensity_window(self, w: IntensityWindow | None) -> None:
        """Install a windowed working copy of the base volume (None restores it)."""
        self.active_volume = self.base_volume if w is None else apply_window(self.base_volume, w)

    # -- episode API ----------------------------------------------------------------

    @property
    def positions(self) -> np.ndarray:
        return self._positions.copy()

    @property
    def done(self) -> bool:
        return self._done

    def reset(self, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """Start an episode; agents start uniformly at random, well spread out.

        Draws are redrawn until the spanned triangle area reaches 1.0 (after 64
        tries the floor relaxes to any positive area).
        """
        rng = SplitMix64(seed)
        floor = _MIN_START_AREA
        tries = 0
        while True:
            pos = np.array(
                [[rng.randrange(d) for d in self.dims] for _ in range(NUM_AGENTS)],
                dtype=np.int64,
            )
            area = geometry.triangle_area(*pos)
            if area >= floor:
                break
            tries += 1
            if tries >= _START_AREA_TRIES:
                floor = np.nextafter(0.0, 1.0)
        self._positions = pos
        self._steps = 0
        self._done = False
        self._plane = geometry.plane_from_points(*pos)
        self._metrics = self._measure(self._plane, area)
        self._visit_history.clear()
        self._visit_history.append(self._config_key())
        obs = self._render_observation(self._plane)
        self._frames.clear()
        for _ in range(self.cfg.history):
            self._frames.append(obs)
        return pos.copy(), obs

    def step(self, actions) -> StepResult:
        if self._done:
            raise EpisodeFinishedError("episode is finished; call reset()")
        actions = np.asarray(actions, dtype=np.int64)
        if actions.shape != (NUM_AGENTS,) or actions.min() < 0 or actions.max() >= NUM_ACTIONS:
            raise ValueError(f"expected 3 action indices in [0, {NUM_ACTIONS}), got {actions}")

        proposed = self._positions + ACTION_VECTORS[actions]
        hi = np.asarray(self.dims, dtype=np.int64) - 1
        oob = ((proposed < 0) | (proposed > hi)).any(axis=1)
        self._positions = np.clip(proposed, 0, hi)

        area = geometry.triangle_area(*self._positions)
        try:
            plane = geometry.plane_from_points(*self._positions)
            degenerate = False
            self._plane = plane
        except CollinearPointsError:
            plane = self._plane  # retain last valid plane for observation/distance
            degenerate = True
        cur = self._measure(plane, area, degenerate)

        rewards = compute_rewards(self._metrics, cur, oob, self.cfg)
        self._steps += 1
        self._visit_history.append(self._config_key())
        osc = oscillation_done(self._visit_history, self.cfg.osc_window, self.cfg.osc_threshold)
        self._done = osc or self._steps >= self.cfg.max_steps

        obs = self._render_observation(plane)
        self._frames.append(obs)
        # Decomposed reward terms for logging/evaluation.
        if degenerate:
            r_plane, r_area = 0.0, -1.0
        else:
            r_plane = _sign(self._metrics.dist - cur.dist, self.cfg.tie_tol)
            r_area = _sign(cur.area - self._metrics.area, self.cfg.tie_tol)
        info = {
            "r_plane": r_plane,
            "r_anat": _sign(float(cur.tissue - self._metrics.tissue), self.cfg.tie_tol),
            "r_area": r_area,
            "dist": cur.dist,
            "tissue": cur.tissue,
            "area": cur.area,
            "oob": oob.tolist(),
            "degenerate": degenerate,
            "oscillation": osc,
            "steps": self._steps,
            "plane": plane.as_array().tolist(),
            "positions": self._positions.tolist(),
        }
        self._metrics = cur
        return StepResult(observation=obs, rewards=rewards, done=self._done, info=info)

    def observe(self) -> np.ndarray:
        """Current pooled intensity observation (most recent frame)."""
        if self._positions is None:
            raise RuntimeError("environment not initialized; call reset()")
        return self._frames[-1].copy()

    def obs_stack(self) -> np.ndarray:
        """History of the last `history` frames, oldest first, shape (H, S, S)."""
        return np.stack(self._frames)

    # -- internals -------------------------------------------------------------------

    def _config_key(self):
        return tuple(map(tuple, self._positions.tolist()))

    def _measure(self, plane: Plane, area: float, degenerate: bool = False) -> PlaneMetrics:
        grid = geometry.slice_grid(plane, self.dims)
        label_slice = geometry.sample_slice(self.labels, grid)
        tissue = int(np.isin(label_slice, self.cfg.tissue_labels).sum())
        dist = geometry.plane_distance(plane, self.goal)
        return PlaneMetrics(dist=dist, tissue=tissue, area=area, degenerate=degenerate)

    def _render_observation(self, plane: Plane) -> np.ndarray:
        grid = geometry.slice_grid(plane, self.dims)
        img = geometry.sample_slice(self.active_volume, grid)
        return average_pool(img, self.cfg.obs_size) / 255.0

    def render_slice(self, plane: Plane | None = None) -> np.ndarray:
        """Full-resolution uint8 intensity slice of the given (or current) plane."""
        p = plane if plane is not None else self._plane
        grid = geometry.slice_grid(p, self.dims)
        return geometry.sample_slice(self.active_volume, grid)
