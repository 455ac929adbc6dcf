import numpy as np
import pytest

from planenav import phantom


@pytest.fixture(scope="session")
def desk_phantom():
    """One 32^3 phantom pair, shared across the suite (generation is pure)."""
    spec = phantom.PhantomSpec(dims=(32, 32, 32), seed=7)
    return phantom.generate(spec)


@pytest.fixture(scope="session")
def desk_goal(desk_phantom):
    _, labels = desk_phantom
    return phantom.goal_plane(labels)


def make_label_volume(dims, voxels_by_label):
    """Hand-built LabelVolume from {label: [(x, y, z), ...]}."""
    from planenav.volume import LabelVolume

    data = np.zeros(dims, dtype=np.uint8)
    for label, voxels in voxels_by_label.items():
        for x, y, z in voxels:
            data[x, y, z] = label
    return LabelVolume(data)
