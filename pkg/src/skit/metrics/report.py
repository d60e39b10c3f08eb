"""Full detector characterisation: every metric, per class, as report rows."""
from __future__ import annotations

import math
import time
from typing import Optional

import numpy as np

from .boxes import SizeBucket
from .coco import (
    COCO_IOU_THRESHOLDS,
    MAX_DETS,
    average_precision,
    average_precision_range,
    average_recall,
)
from .io import per_class
from .lrp import olrp

AREAS = (None, SizeBucket.SMALL, SizeBucket.MEDIUM, SizeBucket.LARGE)
RANGE_LABEL = "0.50:0.95"


def _guard(fn, *args, **kw) -> float:
    # AP/AR are undefined for a bucket without ground truth
    try:
        return fn(*args, **kw)
    except ValueError:
        return math.nan


def evaluate_detector(gt_images: dict, dt_images: dict, cutoff: Optional[float] = None) -> list[dict]:
    """Rows of ``(class_id, metric, iou, area, max_det, value)``.

    Inputs are the nested ``{image: {class: [boxes]}}`` mappings produced by
    :func:`skit.metrics.io.parse_boxes`.
    """
    classes = sorted({c for v in gt_images.values() for c in v} | {c for v in dt_images.values() for c in v})
    ids = list(gt_images) + [k for k in dt_images if k not in gt_images]
    rows = []

    def add(cls, metric, iou, area, max_det, value):
        rows.append(
            dict(class_id=cls, metric=metric, iou=iou, area=area.value if area else "all", max_det=max_det, value=value)
        )

    for cls in classes:
        g = {k: per_class(gt_images, cls).get(k, []) for k in ids}
        d = {k: per_class(dt_images, cls).get(k, []) for k in ids}
        for area in AREAS:
            add(cls, "AP", RANGE_LABEL, area, 100, _guard(average_precision_range, g, d, area=area))
            if area is None:
                add(cls, "AP", "0.50", area, 100, _guard(average_precision, g, d, 0.5))
                add(cls, "AP", "0.75", area, 100, _guard(average_precision, g, d, 0.75))
        for max_det in MAX_DETS:
            add(cls, "AR", RANGE_LABEL, None, max_det, _guard(average_recall, g, d, COCO_IOU_THRESHOLDS, max_det))
        for area in AREAS[1:]:
            add(cls, "AR", RANGE_LABEL, area, 100, _guard(average_recall, g, d, COCO_IOU_THRESHOLDS, 100, area))
        try:
            res = olrp(g, d, 0.5, cutoff=cutoff)
        except ValueError:
            continue
        c = res.components
        for name, val in (
            ("oLRP", res.olrp),
            ("oLRP_IoU", c.lrp_iou),
            ("oLRP_FP", c.lrp_fp),
            ("oLRP_FN", c.lrp_fn),
            ("oLRP_s", res.s_opt),
            ("oLRP_unreliable", float(res.unreliable)),
        ):
            add(cls, name, "0.50", None, "all", val)
    return rows


def timing_stats(gt_images: dict, dt_images: dict) -> dict:
    """Min/mean/max wall time of a per-image evaluation pass, in seconds."""
    times = []
    for k in list(gt_images) + [k for k in dt_images if k not in gt_images]:
        one_g = {k: gt_images.get(k, {})}
        one_d = {k: dt_images.get(k, {})}
        t0 = time.perf_counter()
        evaluate_detector(one_g, one_d)
        times.append(time.perf_counter() - t0)
    if not times:
        return {"min": 0.0, "mean": 0.0, "max": 0.0}
    arr = np.array(times)
    return {"min": float(arr.min()), "mean": float(arr.mean()), "max": float(arr.max())}
