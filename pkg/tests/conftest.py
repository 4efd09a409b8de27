import numpy as np
import pytest

from rgbdmass.cameras import CameraPose, Intrinsics
from rgbdmass.meshes import TriangleMesh


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_intrinsics():
    # integer principal point so the center pixel ray is exactly the z-axis
    return Intrinsics(width=9, height=7, fx=12.0, fy=12.0, cx=4.0, cy=3.0)


@pytest.fixture
def identity_pose():
    # camera frame aligned with the world frame (x right, y down-image = +y)
    return CameraPose(
        position=np.zeros(3), look_at=np.array([0.0, 0.0, 1.0]), up=np.array([0.0, -1.0, 0.0])
    )


def make_quad(z: float, half: float = 5.0) -> TriangleMesh:
    verts = [(-half, -half, z), (half, -half, z), (half, half, z), (-half, half, z)]
    return TriangleMesh(
        vertices=verts,
        faces=[[0, 1, 2], [0, 2, 3]],
        mass=1.0,
        bbox_min=(-half, -half, z),
        bbox_max=(half, half, z),
        id="quad",
    )
