"""Pinhole intrinsics and the scale-normalized 14-view camera rig.

Every object is photographed from a distance of 2.1x its bounding-box
diagonal, so all objects occupy roughly the same screen area regardless of
physical size: 8 views ring the object at equally spaced azimuths from an
elevated angle, and 6 views sit on the +-x/+-y/+-z axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, RenderError

DISTANCE_FACTOR = 2.1
RING_VIEWS = 8
AXIS_VIEWS = 6
NUM_VIEWS = RING_VIEWS + AXIS_VIEWS

# Kinect v1 focal length at 640x480
KINECT_FX_640 = 575.8


@dataclass(frozen=True)
class Intrinsics:
    width: int
    height: int
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DomainError("image dimensions must be positive")
        if self.fx <= 0 or self.fy <= 0:
            raise DomainError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise DomainError("principal point must lie inside the image")

    @classmethod
    def kinect(cls, width: int = 640, height: int = 480) -> "Intrinsics":
        """Kinect v1 intrinsics, rescaled to the requested resolution."""
        return cls(
            width=width,
            height=height,
            fx=KINECT_FX_640 * width / 640.0,
            fy=KINECT_FX_640 * height / 480.0,
            cx=(width - 1) / 2.0,
            cy=(height - 1) / 2.0,
        )

    def to_dict(self) -> dict:
        return {
            "width": self.width, "height": self.height,
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Intrinsics":
        return cls(**{k: d[k] for k in ("width", "height", "fx", "fy", "cx", "cy")})


@dataclass(frozen=True)
class CameraPose:
    position: np.ndarray  # (3,)
    look_at: np.ndarray  # (3,)
    up: np.ndarray  # (3,) unit hint, not parallel to the view direction
    view_index: int = 0

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(np.asarray(self.position) - np.asarray(self.look_at)))


def camera_basis(pose: CameraPose) -> tuple[np.ndarray, np.ndarray]:
    """Rows of R are the camera x/y/z axes in world coordinates.

    Convention: camera z looks at the target, x points right (+u), y points
    down (+v), forming a right-handed frame.
    """
    position = np.asarray(pose.position, dtype=np.float64)
    forward = np.asarray(pose.look_at, dtype=np.float64) - position
    norm = np.linalg.norm(forward)
    if norm < 1e-12:
        raise RenderError("camera position coincides with its target")
    z = forward / norm
    x = np.cross(z, np.asarray(pose.up, dtype=np.float64))
    xnorm = np.linalg.norm(x)
    if xnorm < 1e-9:
        raise RenderError("up vector is parallel to the view direction")
    x = x / xnorm
    y = np.cross(z, x)
    return np.stack([x, y, z]), position


def camera_rig(
    diagonal: float,
    center,
    ring_elevation_deg: float = 45.0,
) -> list[CameraPose]:
    """The 14 poses for one object: 8-view elevated ring + 6 axis views."""
    if not (diagonal > 0):
        raise DomainError(f"diagonal must be positive, got {diagonal}")
    center = np.asarray(center, dtype=np.float64)
    radius = DISTANCE_FACTOR * diagonal
    elev = math.radians(ring_elevation_deg)

    poses = []
    for i in range(RING_VIEWS):
        azim = 2.0 * math.pi * i / RING_VIEWS
        direction = np.array(
            [
                math.cos(azim) * math.cos(elev),
                math.sin(azim) * math.cos(elev),
                math.sin(elev),
            ]
        )
        direction /= np.linalg.norm(direction)
        poses.append(
            CameraPose(
                position=center + radius * direction,
                look_at=center,
                up=np.array([0.0, 0.0, 1.0]),
                view_index=i,
            )
        )

    # top, bottom, front, back, left, right; world +z up degenerates for the
    # top/bottom views, so those use +x as the up hint
    axis_dirs = [
        (np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])),
        (np.array([0.0, 0.0, -1.0]), np.array([1.0, 0.0, 0.0])),
        (np.array([0.0, -1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
        (np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0])),
        (np.array([-1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
        (np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])),
    ]
    for j, (direction, up) in enumerate(axis_dirs):
        poses.append(
            CameraPose(
                position=center + radius * direction,
                look_at=center,
                up=up,
                view_index=RING_VIEWS + j,
            )
        )
    return poses
