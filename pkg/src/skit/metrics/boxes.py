"""Bounding boxes, IoU and COCO size buckets."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

SMALL_AREA = 32.0**2
LARGE_AREA = 96.0**2


class SizeBucket(str, enum.Enum):
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"

    @classmethod
    def of_area(cls, area: float) -> "SizeBucket":
        if area < SMALL_AREA:
            return cls.SMALL
        if area <= LARGE_AREA:
            return cls.MEDIUM
        return cls.LARGE


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates.

    Ground-truth boxes leave ``score`` as ``None``.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    class_id: str = "0"
    score: Optional[float] = None

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self.as_tuple()}")
        if self.score is not None and not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score {self.score} outside [0, 1]")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def bucket(self) -> SizeBucket:
        return SizeBucket.of_area(self.area)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes."""
    for box in (a, b):
        if not (box.x_min < box.x_max and box.y_min < box.y_max):
            raise ValueError(f"degenerate box {box.as_tuple()}")
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def as_array(boxes: Sequence[BoundingBox]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4))
    return np.array([b.as_tuple() for b in boxes], dtype=float)


def iou_matrix(dts: np.ndarray, gts: np.ndarray) -> np.ndarray:
    """Pairwise IoU, shape ``(len(dts), len(gts))``.

    Same arithmetic as :func:`iou`, so scalar and matrix results agree bitwise.
    """
    if len(dts) == 0 or len(gts) == 0:
        return np.zeros((len(dts), len(gts)))
    d = dts[:, None, :]
    g = gts[None, :, :]
    iw = np.minimum(d[..., 2], g[..., 2]) - np.maximum(d[..., 0], g[..., 0])
    ih = np.minimum(d[..., 3], g[..., 3]) - np.maximum(d[..., 1], g[..., 1])
    area_d = (d[..., 2] - d[..., 0]) * (d[..., 3] - d[..., 1])
    area_g = (g[..., 2] - g[..., 0]) * (g[..., 3] - g[..., 1])
    inter = iw * ih
    out = inter / (area_d + area_g - inter)
    out[(iw <= 0.0) | (ih <= 0.0)] = 0.0
    return out
