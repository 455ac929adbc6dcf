import numpy as np
import pytest

from conftest import make_label_volume
from planenav.geometry import CollinearPointsError
from planenav.phantom import (
    DEFAULT_STRUCTURES,
    EllipsoidSpec,
    LabelNotFoundError,
    PhantomSpec,
    centroid,
    generate,
    goal_plane,
)


def brute_force_label_counts(spec: PhantomSpec) -> dict:
    """Independent point-in-ellipsoid enumeration (jitter must be 0)."""
    assert spec.jitter == 0.0
    dims = np.asarray(spec.dims, dtype=float)
    counts = {}
    labels = np.zeros(spec.dims, dtype=np.uint8)
    for s in spec.structures:
        cx, cy, cz = (np.asarray(s.center) * dims).tolist()
        rx, ry, rz = (np.asarray(s.semi_axes) * dims).tolist()
        for x in range(spec.dims[0]):
            for y in range(spec.dims[1]):
                for z in range(spec.dims[2]):
                    q = ((x - cx) / rx) ** 2 + ((y - cy) / ry) ** 2 + ((z - cz) / rz) ** 2
                    if q <= 1.0:
                        labels[x, y, z] = s.label
    for s in spec.structures:
        counts[s.label] = int((labels == s.label).sum())
    return counts


class TestGenerate:
    def test_deterministic_per_spec(self):
        spec = PhantomSpec(dims=(24, 24, 24), seed=3, jitter=0.0)
        v1, l1 = generate(spec)
        v2, l2 = generate(spec)
        assert v1 == v2
        assert l1 == l2

    def test_different_seeds_differ(self):
        a = generate(PhantomSpec(dims=(24, 24, 24), seed=1))[1]
        b = generate(PhantomSpec(dims=(24, 24, 24), seed=2))[1]
        assert a != b

    def test_single_voxel_ellipsoid_centroid(self):
        structures = DEFAULT_STRUCTURES[:3] + (
            EllipsoidSpec(5, (8 / 17, 8 / 17, 8 / 17), (0.4 / 17, 0.4 / 17, 0.4 / 17), 90.0),
        )
        spec = PhantomSpec(dims=(17, 17, 17), seed=0, jitter=0.0, structures=structures)
        _, labels = generate(spec)
        assert (labels.data == 5).sum() == 1
        assert centroid(labels, 5) == pytest.approx([8, 8, 8], abs=1e-12)

    def test_counts_match_enumeration_oracle(self):
        spec = PhantomSpec(dims=(32, 32, 32), seed=5, jitter=0.0)
        _, labels = generate(spec)
        expected = brute_force_label_counts(spec)
        for label, count in expected.items():
            assert int((labels.data == label).sum()) == count

    def test_intensities_reflect_structures(self):
        vol, labels = generate(PhantomSpec(dims=(32, 32, 32), seed=6, jitter=0.0))
        bright = vol.data[labels.data == 1].mean()
        background = vol.data[labels.data == 0].mean()
        assert bright > background + 50

    def test_jitter_varies_counts_across_seeds(self):
        counts = set()
        for seed in range(100):
            _, labels = generate(PhantomSpec(dims=(20, 20, 20), seed=seed, jitter=0.10))
            counts.add(int((labels.data == 1).sum()))
        assert len(counts) > 10  # non-degenerate jitter

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            PhantomSpec(dims=(32, 32, 32), seed=0, jitter=0.5)
        with pytest.raises(ValueError):
            # ellipsoid can cross the boundary once jittered
            PhantomSpec(
                dims=(32, 32, 32),
                seed=0,
                jitter=0.4,
                structures=DEFAULT_STRUCTURES,
            )
        with pytest.raises(ValueError):
            PhantomSpec(dims=(32, 32, 32), seed=0, structures=DEFAULT_STRUCTURES[:2])


class TestCentroid:
    def test_single_voxel(self):
        lv = make_label_volume((8, 8, 8), {2: [(4, 5, 6)]})
        assert centroid(lv, 2) == pytest.approx([4, 5, 6], abs=0)

    def test_two_voxel_midpoint(self):
        lv = make_label_volume((8, 8, 8), {1: [(0, 0, 0), (2, 0, 0)]})
        assert centroid(lv, 1) == pytest.approx([1, 0, 0], abs=0)

    def test_filled_ellipsoid_near_analytic_center(self):
        # independent enumeration builds the shape; centroid must sit within
        # half a voxel of the analytic center
        center, semi = (10.3, 9.6, 11.1), (5.0, 4.0, 3.0)
        voxels = []
        for x in range(22):
            for y in range(22):
                for z in range(22):
                    q = sum(((p - c) / r) ** 2 for p, c, r in zip((x, y, z), center, semi))
                    if q <= 1.0:
                        voxels.append((x, y, z))
        lv = make_label_volume((22, 22, 22), {3: voxels})
        assert np.abs(centroid(lv, 3) - np.array(center)).max() < 0.5

    def test_absent_label(self):
        lv = make_label_volume((4, 4, 4), {1: [(0, 0, 0)]})
        with pytest.raises(LabelNotFoundError):
            centroid(lv, 9)


class TestGoalPlane:
    def test_axis_plane_from_three_voxels(self):
        lv = make_label_volume((8, 8, 8), {1: [(0, 0, 0)], 2: [(1, 0, 0)], 3: [(0, 1, 0)]})
        p = goal_plane(lv)
        assert p.as_array() == pytest.approx([0, 0, 1, 0], abs=1e-12)

    def test_constant_z_centroids(self):
        lv = make_label_volume(
            (10, 10, 10), {1: [(1, 1, 5)], 2: [(7, 2, 5)], 3: [(3, 8, 5)]}
        )
        p = goal_plane(lv)
        assert p.a0 == pytest.approx(0, abs=1e-12)
        assert p.a1 == pytest.approx(0, abs=1e-12)
        assert p.a2 * 5 + p.a3 == pytest.approx(0, abs=1e-12)

    def test_collinear_centroids_raise(self):
        lv = make_label_volume(
            (10, 10, 10), {1: [(0, 0, 0)], 2: [(2, 2, 2)], 3: [(4, 4, 4)]}
        )
        with pytest.raises(CollinearPointsError):
            goal_plane(lv)

    def test_random_phantom_centroids_annihilated(self):
        for seed in range(5):
            _, labels = generate(PhantomSpec(dims=(28, 28, 28), seed=seed))
            p = goal_plane(labels)
            for label in (1, 2, 3):
                assert abs(p.signed_residual(centroid(labels, label))) < 1e-9

    def test_hundred_seeds_all_generate(self):
        for seed in range(100):
            _, labels = generate(PhantomSpec(dims=(20, 20, 20), seed=seed, jitter=0.10))
            assert labels.labels()[:3] == [1, 2, 3]
