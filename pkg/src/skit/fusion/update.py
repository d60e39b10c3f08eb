"""Positive and negative grid updates from one frame of detections."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..metrics.boxes import BoundingBox
from . import kernels
from .camera import CameraModel
from .grid import VoxelGrid
from .raycast import cast_ray
from .sensor import (
    ObjectClassSpec,
    SensorModelParams,
    bbox_area_factor,
    distance_factor,
    log_odds,
    max_distance,
    p_negative,
    p_positive,
    shrink,
)


@dataclass(frozen=True)
class Detection:
    """One scored box in detector-input pixels."""

    bbox: BoundingBox
    score: float
    detector_id: str = "d0"
    timestamp: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    @classmethod
    def from_xyxy(cls, x_min, y_min, x_max, y_max, score, detector_id="d0", timestamp=0.0, class_id="person"):
        return cls(BoundingBox(x_min, y_min, x_max, y_max, class_id, score), score, detector_id, timestamp)

    def check_bounds(self, cam: CameraModel) -> None:
        b = self.bbox
        if b.x_min < 0 or b.y_min < 0 or b.x_max > cam.input_w or b.y_max > cam.input_h:
            raise ValueError(f"bbox {b.as_tuple()} outside the {cam.input_w}x{cam.input_h} input image")

    def significant_pixel(self, which: str) -> tuple[float, float]:
        b = self.bbox
        u = 0.5 * (b.x_min + b.x_max)
        if which == "bottom_center":
            return u, b.y_max
        return u, 0.5 * (b.y_min + b.y_max)


@dataclass(frozen=True)
class PositiveHit:
    cell: tuple
    point: np.ndarray
    distance: float
    area_factor: float
    p: float
    delta: float


def positive_observation(grid: VoxelGrid, det: Detection, cam: CameraModel, cls: ObjectClassSpec, params: SensorModelParams) -> Optional[PositiveHit]:
    """Where a detection lands and how much it would add, without applying it."""
    cam.validate()
    det.check_bounds(cam)
    u, v = det.significant_pixel(cls.significant_point)
    hit = cast_ray(grid, cam.position, cam.pixel_ray(u, v))
    if hit is None:
        return None
    point, (ix, iy) = hit
    dist = float(np.linalg.norm(grid.top_center(ix, iy) - cam.position))
    if dist <= 0.0:
        return None
    area = bbox_area_factor(det.bbox.width, det.bbox.height, cls, cam, dist)
    p = float(shrink(p_positive(area, params.p_det_rel, det.score, params.p_positive_max)))
    return PositiveHit((ix, iy), point, dist, area, p, float(log_odds(p)))


def positive_update(grid: VoxelGrid, det: Detection, cam: CameraModel, cls: ObjectClassSpec, params: SensorModelParams) -> VoxelGrid:
    obs = positive_observation(grid, det, cam, cls, params)
    if obs is not None:
        _apply_positive(grid, obs)
    return grid


def _apply_positive(grid: VoxelGrid, obs: PositiveHit) -> None:
    ix, iy = obs.cell
    grid.add_log_odds(ix, iy, obs.delta)
    if obs.delta > 0.0:
        grid.record_hit(ix, iy, obs.point)


# --------------------------------------------------------------- visibility


def _inside_any(u, v, detections: Sequence[Detection]) -> np.ndarray:
    mask = np.zeros(np.shape(u), dtype=bool)
    for d in detections:
        b = d.bbox
        mask |= (u >= b.x_min) & (u <= b.x_max) & (v >= b.y_min) & (v <= b.y_max)
    return mask


def visible_mask(grid: VoxelGrid, cam: CameraModel, detections: Sequence[Detection] = (), max_range: Optional[float] = None) -> np.ndarray:
    """``(nx, ny)`` mask of cells the camera sees outside every detection box.

    A cell counts as seen when its top-face center projects into the input
    image in front of the camera, no box contains that projection, it lies
    within ``max_range`` (if given) and the terrain does not hide it.
    """
    cam.validate()
    pts = grid.top_centers().reshape(-1, 3)
    u, v, z = cam.project(pts)
    cand = cam.in_image(u, v, z)
    if detections:
        cand &= ~_inside_any(u, v, detections)
    if max_range is not None:
        cand &= np.linalg.norm(pts - cam.position, axis=1) <= max_range
    idx = np.nonzero(cand)[0]
    if idx.size:
        occ = kernels.occluded(pts[idx], cam.position, grid.top, grid.x0, grid.y0, grid.res, grid.max_top)
        cand[idx[occ]] = False
    return cand.reshape(grid.nx, grid.ny)


def visible_cells(grid: VoxelGrid, cam: CameraModel, detections: Sequence[Detection] = (), max_range: Optional[float] = None) -> set:
    ii, jj = np.nonzero(visible_mask(grid, cam, detections, max_range))
    return {(int(i), int(j)) for i, j in zip(ii, jj)}


# ---------------------------------------------------------------- negatives


def negative_update(
    grid: VoxelGrid,
    cam: CameraModel,
    detections: Sequence[Detection],
    cls: ObjectClassSpec,
    params: SensorModelParams,
    exclude: Iterable[tuple] = (),
) -> VoxelGrid:
    """Lower every visible cell outside the boxes according to its range.

    Cells listed in ``exclude`` (the frame's positive targets) are skipped.
    """
    d_max = max_distance(cls, cam, params.min_pixels)
    mask = visible_mask(grid, cam, detections, max_range=d_max)
    for ix, iy in exclude:
        mask[ix, iy] = False
    ii, jj = np.nonzero(mask)
    if ii.size == 0:
        return grid
    centers = np.stack([grid.xc[ii], grid.yc[jj], grid.top[ii, jj]], axis=1)
    dist = np.linalg.norm(centers - cam.position, axis=1)
    p = shrink(p_negative(distance_factor(dist, d_max), params.p_det_rel, params.p_negative_max))
    grid.add_log_odds(ii, jj, log_odds(np.atleast_1d(p)))
    return grid


def update_from_frame(
    grid: VoxelGrid,
    detections: Sequence[Detection],
    cam: CameraModel,
    cls: ObjectClassSpec,
    params: SensorModelParams,
) -> VoxelGrid:
    """One detector's output on one frame: positives first, then one negative sweep."""
    targets = set()
    for det in detections:
        obs = positive_observation(grid, det, cam, cls, params)
        if obs is None:
            continue
        _apply_positive(grid, obs)
        targets.add(obs.cell)
    return negative_update(grid, cam, detections, cls, params, exclude=targets)
