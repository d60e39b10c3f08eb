"""Probabilistic saliency grid fused from detections."""
from .camera import CameraModel, InvalidPose, look_rotation, matrix_to_quaternion, quaternion_to_matrix
from .grid import VoxelGrid, read_grid, write_grid
from .kernels import BACKEND as KERNEL_BACKEND
from .raycast import cast_ray
from .sensor import (
    DEFAULT_CLAMP,
    PERSON,
    ObjectClassSpec,
    SensorModelParams,
    bbox_area_factor,
    distance_factor,
    expected_bbox_extent,
    log_odds,
    log_odds_update,
    max_distance,
    p_negative,
    p_positive,
    probability,
    relative_fidelity,
    shrink,
    tukey_weight,
)
from .terrain import Ridge, Terrain
from .update import (
    Detection,
    PositiveHit,
    negative_update,
    positive_observation,
    positive_update,
    update_from_frame,
    visible_cells,
    visible_mask,
)

__all__ = [
    "CameraModel",
    "InvalidPose",
    "look_rotation",
    "matrix_to_quaternion",
    "quaternion_to_matrix",
    "VoxelGrid",
    "read_grid",
    "write_grid",
    "KERNEL_BACKEND",
    "cast_ray",
    "DEFAULT_CLAMP",
    "PERSON",
    "ObjectClassSpec",
    "SensorModelParams",
    "bbox_area_factor",
    "distance_factor",
    "expected_bbox_extent",
    "log_odds",
    "log_odds_update",
    "max_distance",
    "p_negative",
    "p_positive",
    "probability",
    "relative_fidelity",
    "shrink",
    "tukey_weight",
    "Ridge",
    "Terrain",
    "Detection",
    "PositiveHit",
    "negative_update",
    "positive_observation",
    "positive_update",
    "update_from_frame",
    "visible_cells",
    "visible_mask",
]
