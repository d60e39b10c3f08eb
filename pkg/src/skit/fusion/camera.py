"""Pinhole camera with separate calibration and detector-input resolutions.

World frame is east-north-up. The camera frame has x to the right of the
image, y down the image and z along the optical axis. ``R`` maps camera
coordinates to world coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class InvalidPose(ValueError):
    pass


def look_rotation(yaw: float, pitch: float) -> np.ndarray:
    """World-from-camera rotation for a heading ``yaw`` (radians, CCW from
    east) and a downward tilt ``pitch`` (radians, 0 is horizontal)."""
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    fwd = np.array([cp * cy, cp * sy, -sp])
    right = np.array([sy, -cy, 0.0])
    down = np.cross(fwd, right)
    return np.column_stack([right, down, fwd])


def quaternion_to_matrix(q) -> np.ndarray:
    """``(w, x, y, z)`` unit quaternion to a rotation matrix."""
    w, x, y, z = (float(c) for c in q)
    n = math.sqrt(w * w + x * x + y * y + z * z)
    if n == 0.0:
        raise InvalidPose("zero quaternion")
    w, x, y, z = w / n, x / n, y / n, z / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quaternion(R: np.ndarray) -> tuple:
    # Shepperd's method, branch on the largest diagonal term
    t = np.trace(R)
    if t > 0:
        s = math.sqrt(t + 1.0) * 2
        q = (0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s)
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2
        q = ((R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s)
    elif R[1, 1] > R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2
        q = ((R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s)
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2
        q = ((R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s)
    return tuple(float(c) for c in q)


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    calib_w: int
    calib_h: int
    input_w: int
    input_h: int
    position: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if min(self.calib_w, self.calib_h, self.input_w, self.input_h) <= 0:
            raise ValueError("image sizes must be positive")
        pos = np.asarray(self.position, dtype=float).reshape(3)
        R = np.asarray(self.R, dtype=float).reshape(3, 3)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "R", R)
        self.validate()

    def validate(self) -> None:
        if not np.all(np.isfinite(self.position)) or not np.all(np.isfinite(self.R)):
            raise InvalidPose("non-finite pose")
        if not np.allclose(self.R.T @ self.R, np.eye(3), atol=1e-9) or abs(np.linalg.det(self.R) - 1.0) > 1e-9:
            raise InvalidPose("orientation is not a proper rotation")

    @classmethod
    def looking(cls, position, yaw, pitch, fx, fy, calib=(1280, 720), input_size=None) -> "CameraModel":
        input_size = input_size or calib
        return cls(fx, fy, calib[0], calib[1], input_size[0], input_size[1], np.asarray(position, float), look_rotation(yaw, pitch))

    def with_pose(self, position, R) -> "CameraModel":
        return CameraModel(self.fx, self.fy, self.calib_w, self.calib_h, self.input_w, self.input_h, position, R)

    @property
    def cx(self) -> float:
        return self.calib_w / 2.0

    @property
    def cy(self) -> float:
        return self.calib_h / 2.0

    @property
    def sx(self) -> float:
        return self.input_w / self.calib_w

    @property
    def sy(self) -> float:
        return self.input_h / self.calib_h

    @property
    def fov(self) -> tuple[float, float]:
        """Horizontal and vertical field of view in radians."""
        return 2 * math.atan(self.cx / self.fx), 2 * math.atan(self.cy / self.fy)

    def to_camera(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        return (pts - self.position) @ self.R

    def project(self, pts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """World points ``(..., 3)`` to detector-input pixels ``(u, v)`` and depth."""
        c = self.to_camera(pts)
        z = c[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (self.fx * c[..., 0] / z + self.cx) * self.sx
            v = (self.fy * c[..., 1] / z + self.cy) * self.sy
        return u, v, z

    def in_image(self, u, v, z) -> np.ndarray:
        return (z > 0) & (u >= 0) & (u < self.input_w) & (v >= 0) & (v < self.input_h)

    def pixel_ray(self, u: float, v: float) -> np.ndarray:
        """Unit world direction through a detector-input pixel."""
        uc = u / self.sx
        vc = v / self.sy
        d = np.array([(uc - self.cx) / self.fx, (vc - self.cy) / self.fy, 1.0])
        d = self.R @ d
        return d / np.linalg.norm(d)
