"""Plane algebra and nearest-neighbor oblique slice extraction.

Planes are stored as canonical coefficient 4-vectors (a0, a1, a2, a3) of
a0*x + a1*y + a2*z + a3 = 0 with unit L1 norm and the first nonzero
coefficient positive, so each geometric plane has exactly one representation
and coefficient-space distances are well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import Volume, round_half_up

_SIGN_EPS = 1e-12


class CollinearPointsError(ValueError):
    """Raised when three points fail to span a plane."""


@dataclass(frozen=True)
class Plane:
    a0: float
    a1: float
    a2: float
    a3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2, self.a3])

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2])

    @staticmethod
    def canonical(coeffs) -> "Plane":
        """Normalize raw coefficients to unit L1 norm and canonical sign."""
        c = np.asarray(coeffs, dtype=np.float64)
        if c.shape != (4,):
            raise ValueError(f"expected 4 coefficients, got shape {c.shape}")
        if np.abs(c[:3]).max() < _SIGN_EPS:
            raise ValueError("coefficients (a0, a1, a2) must not all vanish")
        c = c / np.abs(c).sum()
        for v in c:
            if abs(v) > _SIGN_EPS:
                if v < 0:
                    c = -c
                break
        return Plane(*(float(v) for v in c))

    def signed_residual(self, point) -> float:
        """a . (point, 1); zero iff the point lies on the plane."""
        p = np.asarray(point, dtype=np.float64)
        return float(self.a0 * p[0] + self.a1 * p[1] + self.a2 * p[2] + self.a3)


def plane_from_points(p0, p1, p2) -> Plane:
    """Canonical plane through three non-collinear points."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    normal = np.cross(p1 - p0, p2 - p0)
    if np.linalg.norm(normal) < 1e-9:
        raise CollinearPointsError(f"points {p0}, {p1}, {p2} are collinear")
    a3 = -float(normal @ p0)
    return Plane.canonical([normal[0], normal[1], normal[2], a3])


def plane_distance(p: Plane, q: Plane) -> float:
    """Euclidean distance between canonical coefficient 4-vectors."""
    return float(np.linalg.norm(p.as_array() - q.as_array()))


def triangle_area(p0, p1, p2) -> float:
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    return 0.5 * float(np.linalg.norm(np.cross(p1 - p0, p2 - p0)))


@dataclass(frozen=True)
class SliceGrid:
    """Pixel lattice on a plane: ``origin + (i - w/2)*u + (j - h/2)*v``."""

    width: int
    height: int
    origin: np.ndarray
    u: np.ndarray
    v: np.ndarray


def slice_grid(p: Plane, dims) -> SliceGrid:
    """Deterministic in-plane basis and origin for sampling a volume.

    The basis seed axis is the standard axis most orthogonal to the plane
    normal (ties broken toward x), and the origin is the volume center
    projected onto the plane, so axis-aligned planes reproduce raw slices.
    """
    n = p.normal
    axis = int(np.argmin(np.abs(n)))  # argmin takes the lowest index on ties
    e = np.zeros(3)
    e[axis] = 1.0
    u = np.cross(e, n)
    u = u / np.linalg.norm(u)
    v = np.cross(n, u)
    v = v / np.linalg.norm(v)
    center = (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0
    origin = center - ((n @ center + p.a3) / (n @ n)) * n
    side = int(max(dims))
    return SliceGrid(width=side, height=side, origin=origin, u=u, v=v)


def grid_points(g: SliceGrid) -> np.ndarray:
    """Real-valued sample coordinates, shape (height, width, 3)."""
    i = np.arange(g.width, dtype=np.float64) - g.width / 2.0
    j = np.arange(g.height, dtype=np.float64) - g.height / 2.0
    return (
        g.origin[None, None, :]
        + i[None, :, None] * g.u[None, None, :]
        + j[:, None, None] * g.v[None, None, :]
    )


def sample_slice(v: Volume, g: SliceGrid) -> np.ndarray:
    """Nearest-neighbor image of the volume on the grid, shape (height, width).

    Pixels whose rounded coordinate falls outside the volume are 0.
    """
    pts = grid_points(g)
    idx = round_half_up(pts).astype(np.int64)
    nx, ny, nz = v.dims
    inside = (
        (idx[..., 0] >= 0) & (idx[..., 0] < nx)
        & (idx[..., 1] >= 0) & (idx[..., 1] < ny)
        & (idx[..., 2] >= 0) & (idx[..., 2] < nz)
    )
    out = np.zeros((g.height, g.width), dtype=v.data.dtype)
    ix, iy, iz = idx[inside, 0], idx[inside, 1], idx[inside, 2]
    out[inside] = v.data[ix, iy, iz]
    return out
