"""Voxel volume containers, VVOL file I/O, and intensity-domain augmentation.

A volume is a dense 3D grid of 8-bit values addressed as ``data[x, y, z]``.
The on-disk VVOL container stores the payload x-fastest (linear index
``x + nx*(y + ny*z)``) behind a fixed little-endian header:

    bytes 0-3   magic ``VVOL``
    byte  4     version (1)
    byte  5     dtype: 0 = intensity volume, 1 = label volume
    bytes 6-7   reserved, zero
    bytes 8-19  nx, ny, nz as u32 little-endian
    payload     nx*ny*nz bytes

An optional ``<path>.json`` sidecar may carry free-form metadata; the loader
ignores it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import SplitMix64, derive_seed

VVOL_MAGIC = b"VVOL"
VVOL_VERSION = 1
VVOL_HEADER = struct.Struct("<4sBBH3I")  # magic, version, dtype, reserved, dims

DTYPE_INTENSITY = 0
DTYPE_LABEL = 1


class VvolFormatError(ValueError):
    """Raised when a VVOL file violates the container format."""


def round_half_up(x):
    """The single quantization rule: ties round away from the floor (0.5 -> 1).

    Works elementwise on arrays; returns floats, callers cast as needed.
    """
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5)


@dataclass
class Volume:
    """8-bit intensity volume; ``data`` has shape (nx, ny, nz)."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {self.data.shape}")
        if self.data.dtype != np.uint8:
            raise ValueError(f"volume data must be uint8, got {self.data.dtype}")
        if min(self.data.shape) < 1:
            raise ValueError(f"volume dims must be positive, got {self.data.shape}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.data.shape)

    def copy(self):
        return type(self)(self.data.copy())

    def __eq__(self, other):
        return (
            type(self) is type(other)
            and self.dims == other.dims
            and np.array_equal(self.data, other.data)
        )


class LabelVolume(Volume):
    """8-bit label volume (0 = background)."""

    def labels(self) -> list[int]:
        """Sorted label ids present, background excluded."""
        return [int(v) for v in np.unique(self.data) if v != 0]


@dataclass(frozen=True)
class IntensityWindow:
    lo: int
    hi: int

    def __post_init__(self):
        if not (0 <= self.lo < self.hi <= 255):
            raise ValueError(f"window must satisfy 0 <= lo < hi <= 255, got ({self.lo}, {self.hi})")


def save_vvol(v: Volume, path) -> None:
    """Write ``v`` to ``path`` in the VVOL container format."""
    dtype = DTYPE_LABEL if isinstance(v, LabelVolume) else DTYPE_INTENSITY
    nx, ny, nz = v.dims
    header = VVOL_HEADER.pack(VVOL_MAGIC, VVOL_VERSION, dtype, 0, nx, ny, nz)
    payload = v.data.ravel(order="F").tobytes()  # x-fastest
    Path(path).write_bytes(header + payload)


def load_vvol(path) -> Volume:
    """Load a VVOL file; the dtype byte selects Volume vs LabelVolume."""
    raw = Path(path).read_bytes()
    if len(raw) < VVOL_HEADER.size:
        raise VvolFormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, dtype, _reserved, nx, ny, nz = VVOL_HEADER.unpack_from(raw)
    if magic != VVOL_MAGIC:
        raise VvolFormatError(f"{path}: bad magic {magic!r}")
    if version != VVOL_VERSION:
        raise VvolFormatError(f"{path}: unsupported version {version}")
    if dtype not in (DTYPE_INTENSITY, DTYPE_LABEL):
        raise VvolFormatError(f"{path}: unknown dtype byte {dtype}")
    if nx == 0 or ny == 0 or nz == 0:
        raise VvolFormatError(f"{path}: zero dimension in dims ({nx}, {ny}, {nz})")
    n = nx * ny * nz
    payload = raw[VVOL_HEADER.size:]
    if len(payload) < n:
        raise VvolFormatError(f"{path}: payload holds {len(payload)} bytes, dims require {n}")
    data = np.frombuffer(payload[:n], dtype=np.uint8).reshape((nx, ny, nz), order="F")
    cls = LabelVolume if dtype == DTYPE_LABEL else Volume
    return cls(data.copy())


def apply_window(v: Volume, w: IntensityWindow) -> Volume:
    """Linearly remap intensities so [lo, hi] spans the full 8-bit range."""
    t = (v.data.astype(np.float64) - w.lo) / (w.hi - w.lo)
    out = round_half_up(255.0 * np.clip(t, 0.0, 1.0))
    return Volume(out.astype(np.uint8))


def _sg_center_coeffs(window: int, order: int) -> np.ndarray:
    """Least-squares smoothing weights: fit a degree-`order` polynomial over a
    symmetric window and evaluate it at the center sample."""
    half = window // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    a = np.vander(x, order + 1, increasing=True)
    # Center evaluation picks out the constant term of the fitted polynomial.
    return np.linalg.pinv(a)[0]


def sg_smooth_z(v: Volume, window: int = 5, order: int = 1) -> Volume:
    """Smooth each (x, y) profile along z with a Savitzky-Golay filter.

    Boundary samples use the largest odd window that fits inside the array
    (shrinking symmetrically), so output length equals input length.
    """
    nx, ny, nz = v.dims
    if window % 2 == 0 or window < 1:
        raise ValueError(f"window must be odd and positive, got {window}")
    if window > nz:
        raise ValueError(f"window {window} exceeds z extent {nz}")
    if order < 0 or order >= window:
        raise ValueError(f"order must satisfy 0 <= order < window, got {order}")

    data = v.data.astype(np.float64)
    out = np.empty_like(data)
    half = window // 2
    for z in range(nz):
        h = min(half, z, nz - 1 - z)
        coeffs = _sg_center_coeffs(2 * h + 1, min(order, 2 * h))
        out[:, :, z] = np.tensordot(data[:, :, z - h : z + h + 1], coeffs, axes=([2], [0]))
    out = np.clip(round_half_up(out), 0, 255)
    return Volume(out.astype(np.uint8))


def add_noise(v: Volume, sigma: float, seed: int) -> Volume:
    """Add zero-mean Gaussian noise of the given std-dev, clamped to [0, 255].

    Deterministic per seed; sigma = 0 returns an identical copy.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return v.copy()
    rng = SplitMix64(derive_seed(seed, 0x6E6F6973))  # stream tag: 'nois'
    noise = rng.gaussian_array(v.data.size).reshape(v.dims, order="F")
    out = np.clip(round_half_up(v.data.astype(np.float64) + sigma * noise), 0, 255)
    return Volume(out.astype(np.uint8))
