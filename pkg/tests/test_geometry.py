import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from planenav.geometry import (
    CollinearPointsError,
    Plane,
    plane_distance,
    plane_from_points,
    sample_slice,
    slice_grid,
    triangle_area,
    grid_points,
)
from planenav.rng import SplitMix64
from planenav.volume import Volume

point3 = st.tuples(st.integers(0, 63), st.integers(0, 63), st.integers(0, 63))


def noncollinear_triples(draw_seed=0):
    return st.tuples(point3, point3, point3).filter(
        lambda t: np.linalg.norm(
            np.cross(np.subtract(t[1], t[0]), np.subtract(t[2], t[0]))
        ) >= 1e-9
    )


def assert_canonical(p: Plane):
    c = p.as_array()
    assert abs(np.abs(c).sum() - 1.0) <= 1e-9
    nonzero = c[np.abs(c) > 1e-12]
    assert nonzero.size > 0 and nonzero[0] > 0
    assert np.abs(c[:3]).max() > 0


class TestPlaneFromPoints:
    def test_xy_plane(self):
        p = plane_from_points((0, 0, 0), (1, 0, 0), (0, 1, 0))
        assert p.as_array() == pytest.approx([0, 0, 1, 0], abs=1e-12)

    def test_unit_simplex_plane(self):
        p = plane_from_points((1, 0, 0), (0, 1, 0), (0, 0, 1))
        assert p.as_array() == pytest.approx([0.25, 0.25, 0.25, -0.25], abs=1e-12)

    def test_collinear_raises(self):
        with pytest.raises(CollinearPointsError):
            plane_from_points((0, 0, 0), (1, 1, 1), (2, 2, 2))

    def test_scale_invariance(self):
        p = plane_from_points((0, 0, 0), (1, 2, 0), (0, 1, 3))
        q = plane_from_points((0, 0, 0), (2, 4, 0), (0, 2, 6))
        assert p.as_array() == pytest.approx(q.as_array(), abs=1e-12)

    @given(noncollinear_triples())
    @settings(max_examples=200, deadline=None)
    def test_canonical_and_permutation_invariant(self, pts):
        p0, p1, p2 = pts
        base = plane_from_points(p0, p1, p2)
        assert_canonical(base)
        for perm in [(p1, p2, p0), (p2, p0, p1), (p1, p0, p2)]:
            assert plane_from_points(*perm).as_array() == pytest.approx(
                base.as_array(), abs=1e-9
            )
        for p in pts:
            assert abs(base.signed_residual(p)) <= 1e-9


class TestPlaneDistance:
    def test_identical_planes(self):
        p = plane_from_points((0, 0, 0), (3, 1, 0), (1, 4, 2))
        assert plane_distance(p, p) == 0.0

    def test_orthogonal_unit_vectors(self):
        p = Plane.canonical([0, 0, 1, 0])
        q = Plane.canonical([0, 1, 0, 0])
        assert plane_distance(p, q) == pytest.approx(math.sqrt(2), abs=1e-12)

    def test_direct_arithmetic(self):
        p = Plane.canonical([0, 0, 1, 0])
        q = Plane.canonical([0.25, 0.25, 0.25, -0.25])
        # sqrt(0.0625 + 0.0625 + 0.5625 + 0.0625) = sqrt(0.75)
        assert plane_distance(p, q) == pytest.approx(math.sqrt(0.75), abs=1e-12)

    @given(noncollinear_triples(), noncollinear_triples(), noncollinear_triples())
    @settings(max_examples=100, deadline=None)
    def test_metric_properties(self, ta, tb, tc):
        a, b, c = (plane_from_points(*t) for t in (ta, tb, tc))
        assert plane_distance(a, b) == plane_distance(b, a)
        assert plane_distance(a, b) >= 0
        assert plane_distance(a, c) <= plane_distance(a, b) + plane_distance(b, c) + 1e-12


class TestTriangleArea:
    @pytest.mark.parametrize(
        "pts,area",
        [
            (((0, 0, 0), (1, 0, 0), (0, 1, 0)), 0.5),
            (((0, 0, 0), (2, 0, 0), (0, 2, 0)), 2.0),
            (((1, 1, 1), (2, 2, 2), (3, 3, 3)), 0.0),
        ],
    )
    def test_known_areas(self, pts, area):
        assert triangle_area(*pts) == pytest.approx(area, abs=1e-12)


class TestSliceGrid:
    def test_axis_aligned_plane_spans_constant_z(self):
        k = 5
        plane = Plane.canonical([0, 0, 1, -k])
        g = slice_grid(plane, (16, 16, 16))
        pts = grid_points(g)
        assert pts[..., 2] == pytest.approx(np.full((16, 16), float(k)), abs=1e-9)

    def test_origin_lies_on_plane(self):
        rng = SplitMix64(77)
        for _ in range(200):
            coeffs = 2.0 * rng.uniform_array(4) - 1.0
            if np.abs(coeffs[:3]).max() < 1e-3:
                continue
            p = Plane.canonical(coeffs)
            g = slice_grid(p, (32, 24, 40))
            assert abs(p.signed_residual(g.origin)) <= 1e-9

    def test_basis_orthonormal_random_planes(self):
        rng = SplitMix64(78)
        for _ in range(1000):
            coeffs = 2.0 * rng.uniform_array(4) - 1.0
            if np.abs(coeffs[:3]).max() < 1e-3:
                continue
            p = Plane.canonical(coeffs)
            g = slice_grid(p, (32, 32, 32))
            n = p.normal
            assert abs(g.u @ g.v) <= 1e-9
            assert abs(np.linalg.norm(g.u) - 1) <= 1e-9
            assert abs(np.linalg.norm(g.v) - 1) <= 1e-9
            assert abs(g.u @ n) <= 1e-9 * np.linalg.norm(n)
            assert abs(g.v @ n) <= 1e-9 * np.linalg.norm(n)


def brute_force_slice(vol: Volume, g) -> np.ndarray:
    """Scalar re-implementation of the sampling contract, written first as the
    oracle for the vectorized path."""
    nx, ny, nz = vol.dims
    out = np.zeros((g.height, g.width), dtype=vol.data.dtype)
    for j in range(g.height):
        for i in range(g.width):
            px = g.origin[0] + (i - g.width / 2.0) * g.u[0] + (j - g.height / 2.0) * g.v[0]
            py = g.origin[1] + (i - g.width / 2.0) * g.u[1] + (j - g.height / 2.0) * g.v[1]
            pz = g.origin[2] + (i - g.width / 2.0) * g.u[2] + (j - g.height / 2.0) * g.v[2]
            x = math.floor(px + 0.5)
            y = math.floor(py + 0.5)
            z = math.floor(pz + 0.5)
            if 0 <= x < nx and 0 <= y < ny and 0 <= z < nz:
                out[j, i] = vol.data[x, y, z]
    return out


class TestSampleSlice:
    def test_constant_volume(self):
        v = Volume(np.full((8, 8, 8), 9, dtype=np.uint8))
        plane = plane_from_points((0, 0, 4), (7, 0, 4), (0, 7, 4))
        g = slice_grid(plane, v.dims)
        img = sample_slice(v, g)
        inside = img[2:6, 2:6]
        assert (inside == 9).all()

    def test_z_indexed_volume_on_axial_plane(self):
        data = np.zeros((8, 8, 8), dtype=np.uint8)
        for z in range(8):
            data[:, :, z] = z
        v = Volume(data)
        k = 3
        g = slice_grid(Plane.canonical([0, 0, 1, -k]), v.dims)
        img = sample_slice(v, g)
        idx = np.floor(grid_points(g) + 0.5).astype(int)
        inside = ((idx >= 0) & (idx < 8)).all(axis=2)
        assert inside.any()
        assert (img[inside] == k).all()  # every in-bounds pixel reads slice z = 3
        assert (img[~inside] == 0).all()

    def test_matches_brute_force_on_random_cases(self):
        rng = SplitMix64(123)
        for case in range(20):
            data = (rng.uniform_array(32**3) * 256).astype(np.uint8)
            v = Volume(data.reshape((32, 32, 32), order="F"))
            coeffs = 2.0 * rng.uniform_array(4) - 1.0
            while np.abs(coeffs[:3]).max() < 1e-3:
                coeffs = 2.0 * rng.uniform_array(4) - 1.0
            p = Plane.canonical(coeffs)
            g = slice_grid(p, v.dims)
            assert (sample_slice(v, g) == brute_force_slice(v, g)).all(), f"case {case}"

    def test_depends_only_on_canonical_plane(self):
        v = Volume((np.arange(512, dtype=np.uint8)).reshape(8, 8, 8))
        pts = [(1, 2, 0), (6, 1, 3), (2, 7, 5)]
        imgs = []
        for perm in [(0, 1, 2), (2, 0, 1), (1, 2, 0)]:
            p = plane_from_points(*[pts[i] for i in perm])
            imgs.append(sample_slice(v, slice_grid(p, v.dims)))
        assert (imgs[0] == imgs[1]).all()
        assert (imgs[0] == imgs[2]).all()
