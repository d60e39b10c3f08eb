"""Detection quality metrics: IoU matching, COCO AP/AR and LRP/oLRP."""
from .boxes import BoundingBox, SizeBucket, iou, iou_matrix
from .coco import (
    COCO_IOU_THRESHOLDS,
    average_precision,
    average_precision_range,
    average_recall,
)
from .lrp import LRPResult, OLRPResult, lrp_error, olrp
from .matching import MatchResult, match_detections, precision_recall

__all__ = [
    "BoundingBox",
    "SizeBucket",
    "iou",
    "iou_matrix",
    "MatchResult",
    "match_detections",
    "precision_recall",
    "average_precision",
    "average_precision_range",
    "average_recall",
    "COCO_IOU_THRESHOLDS",
    "LRPResult",
    "OLRPResult",
    "lrp_error",
    "olrp",
]
