"""Procedural labeled phantoms and the goal plane through structure centroids.

Each phantom is a stack of ellipsoids rasterized into paired intensity/label
volumes over a smooth background. Structure parameters are jittered
multiplicatively (default +-10%) per seed so every phantom differs while the
three chambers of interest stay present and non-collinear.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import CollinearPointsError, Plane, plane_from_points
from .rng import SplitMix64, derive_seed
from .volume import LabelVolume, Volume, round_half_up

TISSUE_LABELS = (1, 2, 3)

_MAX_JITTER_ATTEMPTS = 16


class PhantomGenerationError(RuntimeError):
    """Raised when no jitter draw yields a usable phantom."""


class LabelNotFoundError(KeyError):
    """Raised when a requested label id is absent from a label volume."""


@dataclass(frozen=True)
class EllipsoidSpec:
    """One structure: position/size as fractions of the volume dims."""

    label: int
    center: tuple[float, float, float]
    semi_axes: tuple[float, float, float]
    intensity: float


# Chambers 1-3 span an oblique goal plane. Their centers are chosen so the
# plane normal has all components comparable and solidly nonzero: an oblique
# goal that sits well away from the canonical-sign discontinuity of the
# coefficient metric (a near-zero leading coefficient would make geometric
# neighbors of the goal read as near-antipodal). Labels 4-6 are
# reward-irrelevant decoys: a spine-like rod plus two thin fiducial rods
# along the other axes, placed asymmetrically so oblique cuts carry pose cues.
DEFAULT_STRUCTURES = (
    EllipsoidSpec(1, (0.40, 0.40, 0.42), (0.160, 0.140, 0.130), 225.0),
    EllipsoidSpec(2, (0.62, 0.48, 0.34), (0.110, 0.100, 0.095), 150.0),
    EllipsoidSpec(3, (0.46, 0.66, 0.56), (0.085, 0.080, 0.075), 95.0),
    EllipsoidSpec(4, (0.50, 0.78, 0.50), (0.060, 0.060, 0.280), 250.0),
    EllipsoidSpec(5, (0.50, 0.18, 0.22), (0.300, 0.045, 0.045), 250.0),
    EllipsoidSpec(6, (0.80, 0.50, 0.78), (0.045, 0.300, 0.045), 250.0),
)


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int]
    seed: int
    jitter: float = 0.10
    structures: tuple[EllipsoidSpec, ...] = field(default=DEFAULT_STRUCTURES)

    def __post_init__(self):
        if not (0.0 <= self.jitter < 0.5):
            raise ValueError(f"jitter must lie in [0, 0.5), got {self.jitter}")
        if min(self.dims) < 4:
            raise ValueError(f"dims too small: {self.dims}")
        present = {s.label for s in self.structures}
        missing = set(TISSUE_LABELS) - present
        if missing:
            raise ValueError(f"structure table must include labels {TISSUE_LABELS}, missing {sorted(missing)}")
        hi = 1.0 + self.jitter
        lo = 1.0 - self.jitter
        for s in self.structures:
            for d, c, r in zip(self.dims, s.center, s.semi_axes):
                if c * lo * d - r * hi * d < 0 or c * hi * d + r * hi * d > d - 1:
                    raise ValueError(
                        f"structure {s.label} can leave the volume after jitter {self.jitter}"
                    )


def _background(dims, rng: SplitMix64) -> np.ndarray:
    """Radial gradient from the volume center plus smooth low-amplitude noise."""
    nx, ny, nz = dims
    center = (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0
    x, y, z = np.meshgrid(
        np.arange(nx, dtype=np.float64),
        np.arange(ny, dtype=np.float64),
        np.arange(nz, dtype=np.float64),
        indexing="ij",
    )
    r = np.sqrt((x - center[0]) ** 2 + (y - center[1]) ** 2 + (z - center[2]) ** 2)
    bg = 30.0 + 50.0 * r / max(r.max(), 1.0)

    # Coarse 4^3 noise grid, trilinearly upsampled -> smooth texture.
    coarse = 8.0 * (rng.uniform_array(64).reshape(4, 4, 4) - 0.5)
    fx = np.linspace(0, 3, nx)
    fy = np.linspace(0, 3, ny)
    fz = np.linspace(0, 3, nz)
    i0x, i0y, i0z = (np.minimum(f.astype(int), 2) for f in (fx, fy, fz))
    tx, ty, tz = fx - i0x, fy - i0y, fz - i0z

    def lerp_axis(arr, lo_idx, t, axis):
        a = np.take(arr, lo_idx, axis=axis)
        b = np.take(arr, lo_idx + 1, axis=axis)
        shape = [1, 1, 1]
        shape[axis] = len(t)
        return a + (b - a) * t.reshape(shape)

    noise = lerp_axis(lerp_axis(lerp_axis(coarse, i0x, tx, 0), i0y, ty, 1), i0z, tz, 2)
    return bg + noise


def generate(spec: PhantomSpec) -> tuple[Volume, LabelVolume]:
    """Rasterize the jittered structure table into paired volumes.

    Deterministic per spec (seed included). Jitter is redrawn up to 16 times
    until labels 1-3 are non-empty with non-collinear centroids.
    """
    rng = SplitMix64(derive_seed(spec.seed, 0x7068616E))  # stream tag: 'phan'
    dims = np.asarray(spec.dims, dtype=np.float64)
    bg = _background(spec.dims, rng)

    coords = np.meshgrid(
        np.arange(spec.dims[0], dtype=np.float64),
        np.arange(spec.dims[1], dtype=np.float64),
        np.arange(spec.dims[2], dtype=np.float64),
        indexing="ij",
    )

    for _ in range(_MAX_JITTER_ATTEMPTS):
        intensity = bg.copy()
        labels = np.zeros(spec.dims, dtype=np.uint8)
        for s in spec.structures:
            factors = 1.0 + spec.jitter * (2.0 * rng.uniform_array(7) - 1.0)
            center = np.asarray(s.center) * dims * factors[0:3]
            semi = np.maximum(np.asarray(s.semi_axes) * dims * factors[3:6], 1e-6)
            mean = s.intensity * factors[6]
            q = sum(((c - cc) / r) ** 2 for c, cc, r in zip(coords, center, semi))
            inside = q <= 1.0  # later structures overwrite earlier ones
            labels[inside] = s.label
            intensity[inside] = mean + bg[inside]
        try:
            lv = LabelVolume(labels)
            cents = [centroid(lv, lbl) for lbl in TISSUE_LABELS]
            plane_from_points(*cents)
        except (LabelNotFoundError, CollinearPointsError):
            continue
        vol = Volume(np.clip(round_half_up(intensity), 0, 255).astype(np.uint8))
        return vol, lv
    raise PhantomGenerationError(
        f"no usable phantom after {_MAX_JITTER_ATTEMPTS} jitter draws (seed {spec.seed})"
    )


def centroid(l: LabelVolume, label: int) -> np.ndarray:
    """Arithmetic mean of the voxel coordinates carrying the label."""
    xs, ys, zs = np.nonzero(l.data == label)
    if xs.size == 0:
        raise LabelNotFoundError(f"label {label} not present")
    return np.array([xs.mean(), ys.mean(), zs.mean()])


def goal_plane(l: LabelVolume, labels: tuple[int, int, int] = TISSUE_LABELS) -> Plane:
    """Canonical plane through the centroids of the three given labels."""
    cents = [centroid(l, lbl) for lbl in labels]
    return plane_from_points(*cents)
