"""Ideal image-plane footprints of world objects for one frame."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fusion.camera import CameraModel
from ..fusion.terrain import Terrain
from .scenario import Scenario, WorldObject

# terrain samples along the sight line for object occlusion
_LOS_SAMPLES = 64


@dataclass(frozen=True)
class Projection:
    index: int
    bbox: tuple  # clipped to the input image
    ideal: tuple  # unclipped
    distance: float
    ground: np.ndarray  # world bottom-center point

    @property
    def size(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return float(np.sqrt(max(x1 - x0, 0.0) * max(y1 - y0, 0.0)))


def object_ground(terrain: Terrain, obj: WorldObject, t: float) -> np.ndarray:
    x, y = obj.xy(t)
    return np.array([x, y, float(terrain.height(x, y))])


def billboard(cam: CameraModel, ground: np.ndarray, width: float, height: float) -> np.ndarray:
    """Four corners of an upright rectangle through ``ground`` facing the camera."""
    h = ground[:2] - cam.position[:2]
    n = float(np.hypot(h[0], h[1]))
    if n < 1e-9:
        right = cam.R[:, 0].copy()
        right[2] = 0.0
        right /= np.linalg.norm(right)
    else:
        right = np.array([-h[1] / n, h[0] / n, 0.0])
    half = 0.5 * width * right
    up = np.array([0.0, 0.0, height])
    return np.array([ground - half, ground + half, ground - half + up, ground + half + up])


def _line_of_sight(terrain: Terrain, a: np.ndarray, b: np.ndarray) -> bool:
    s = np.linspace(0.0, 1.0, _LOS_SAMPLES + 2)[1:-1]
    pts = a[None, :] + s[:, None] * (b - a)[None, :]
    return bool(np.all(pts[:, 2] >= terrain.height(pts[:, 0], pts[:, 1]) - 1e-9))


def project_object(cam: CameraModel, terrain: Terrain, obj: WorldObject, index: int, t: float):
    """Projection of one object, or ``None`` if it is not in view."""
    g = object_ground(terrain, obj, t)
    corners = billboard(cam, g, obj.width, obj.height)
    u, v, z = cam.project(corners)
    if np.any(z <= 0):
        return None
    bu, bv, bz = cam.project(g)
    if not cam.in_image(bu, bv, bz):
        return None
    mid = g + np.array([0.0, 0.0, 0.5 * obj.height])
    if not _line_of_sight(terrain, mid, cam.position):
        return None
    ideal = (float(u.min()), float(v.min()), float(u.max()), float(v.max()))
    clipped = (max(ideal[0], 0.0), max(ideal[1], 0.0), min(ideal[2], float(cam.input_w)), min(ideal[3], float(cam.input_h)))
    if clipped[2] - clipped[0] < 1.0 or clipped[3] - clipped[1] < 1.0:
        return None
    return Projection(index, clipped, ideal, float(np.linalg.norm(g - cam.position)), g)


def camera_at(sc: Scenario, t: float) -> CameraModel:
    pos, R = sc.trajectory.pose(t)
    return sc.camera.at(pos, R)


def render_frame(sc: Scenario, t: float) -> tuple[CameraModel, list[Projection]]:
    """True camera at ``t`` and the visible objects' ideal boxes."""
    cam = camera_at(sc, t)
    out = []
    for i, obj in enumerate(sc.objects):
        p = project_object(cam, sc.terrain, obj, i, t)
        if p is not None:
            out.append(p)
    return cam, out
