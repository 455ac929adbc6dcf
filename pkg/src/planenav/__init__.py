"""Multi-agent Q-learning toolkit for steering a view plane, spanned by three
voxel-stepping agents, onto a target plane inside a labeled 3D volume."""

from .env import EnvConfig, NavEnv, StepResult
from .geometry import Plane, plane_distance, plane_from_points, sample_slice, slice_grid, triangle_area
from .phantom import PhantomSpec, centroid, generate, goal_plane
from .qnet import QNetConfig, QParams
from .replay import PerBuffer, Transition
from .trainer import TrainConfig, TrainReport, train
from .volume import IntensityWindow, LabelVolume, Volume, load_vvol, save_vvol

__all__ = [
    "EnvConfig", "NavEnv", "StepResult",
    "Plane", "plane_distance", "plane_from_points", "sample_slice", "slice_grid", "triangle_area",
    "PhantomSpec", "centroid", "generate", "goal_plane",
    "QNetConfig", "QParams",
    "PerBuffer", "Transition",
    "TrainConfig", "TrainReport", "train",
    "IntensityWindow", "LabelVolume", "Volume", "load_vvol", "save_vvol",
]

__version__ = "0.1.0"
