"""COCO-style average precision and average recall.

Matching happens per image; precision/recall curves are built from the
detections of all images pooled together.

Inputs are either a sequence of boxes (one image) or a mapping from image id
to a sequence of boxes.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Mapping, Optional, Sequence, Union

import numpy as np

from .boxes import BoundingBox, SizeBucket, as_array, iou_matrix
from .matching import greedy_assign, score_order

# (50 + 5k) / 100 rather than 0.5 + 0.05 k: exact decimal thresholds
COCO_IOU_THRESHOLDS = tuple((50 + 5 * k) / 100 for k in range(10))
RECALL_POINTS = np.arange(101) / 100
MAX_DETS = (1, 10, 100)

Boxes = Union[Sequence[BoundingBox], Mapping[Hashable, Sequence[BoundingBox]]]


def as_images(gts: Boxes, dts: Boxes) -> list[tuple[Hashable, list, list]]:
    """Normalise inputs to ``[(image_id, gts, dts), ...]``."""
    if not isinstance(gts, Mapping) and not isinstance(dts, Mapping):
        return [(0, list(gts), list(dts))]
    if not isinstance(gts, Mapping) or not isinstance(dts, Mapping):
        raise TypeError("gts and dts must both be per-image mappings or both be sequences")
    ids = list(gts)
    ids += [k for k in dts if k not in gts]
    return [(k, list(gts.get(k, ())), list(dts.get(k, ()))) for k in ids]


@dataclass
class ImageEval:
    scores: np.ndarray  # kept detections, descending score
    index: np.ndarray  # global detection index (tie-break key)
    matched: np.ndarray  # (T, n) bool
    ignored: np.ndarray  # (T, n) bool
    n_gt: int  # non-ignored ground truths


def evaluate_images(
    gts: Boxes,
    dts: Boxes,
    thresholds: Sequence[float],
    area: Optional[SizeBucket] = None,
    max_det: Optional[int] = None,
) -> list[ImageEval]:
    results = []
    offset = 0
    for _, g, d in as_images(gts, dts):
        scores = np.array([b.score if b.score is not None else 0.0 for b in d], dtype=float)
        order = score_order(scores)
        if max_det is not None:
            order = order[:max_det]
        ious = iou_matrix(as_array(d), as_array(g))
        if area is None:
            gt_ign = np.zeros(len(g), dtype=bool)
            dt_out = np.zeros(len(d), dtype=bool)
        else:
            gt_ign = np.array([b.bucket != area for b in g], dtype=bool)
            dt_out = np.array([b.bucket != area for b in d], dtype=bool)
        matched = np.zeros((len(thresholds), len(order)), dtype=bool)
        ignored = np.zeros((len(thresholds), len(order)), dtype=bool)
        for t, tau in enumerate(thresholds):
            dt_match, _ = greedy_assign(ious, order, tau, gt_ign)
            m = dt_match[order]
            matched[t] = m >= 0
            # matched to an ignored gt, or unmatched and outside the size bucket
            gt_hit = gt_ign[np.maximum(m, 0)] if len(g) else np.zeros(len(m), dtype=bool)
            ignored[t] = np.where(m >= 0, gt_hit, dt_out[order])
        results.append(
            ImageEval(
                scores=scores[order],
                index=order + offset,
                matched=matched,
                ignored=ignored,
                n_gt=int((~gt_ign).sum()),
            )
        )
        offset += len(d)
    return results


def _pooled(evals: list[ImageEval], t: int):
    n_gt = sum(e.n_gt for e in evals)
    if n_gt == 0:
        raise ValueError("no ground truth boxes: AP/AR undefined")
    if not evals:
        return n_gt, np.zeros(0, dtype=bool)
    scores = np.concatenate([e.scores for e in evals])
    index = np.concatenate([e.index for e in evals])
    matched = np.concatenate([e.matched[t] for e in evals])
    ignored = np.concatenate([e.ignored[t] for e in evals])
    keep = ~ignored
    scores, index, matched = scores[keep], index[keep], matched[keep]
    order = np.lexsort((index, -scores))
    return n_gt, matched[order]


def interpolated_ap(tp_flags: np.ndarray, n_gt: int) -> float:
    """101-point interpolated AP for detections already in score order."""
    if len(tp_flags) == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    fp = np.cumsum(~tp_flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_POINTS, side="left")
    q = np.zeros(len(RECALL_POINTS))
    hit = idx < len(recall)
    q[hit] = envelope[idx[hit]]
    return float(q.mean())


def average_precision(
    gts: Boxes,
    dts: Boxes,
    tau: float = 0.5,
    area: Optional[SizeBucket] = None,
    max_det: int = 100,
) -> float:
    """101-point interpolated AP at one IoU threshold."""
    evals = evaluate_images(gts, dts, [tau], area, max_det)
    n_gt, flags = _pooled(evals, 0)
    return interpolated_ap(flags, n_gt)


def average_precision_range(
    gts: Boxes,
    dts: Boxes,
    thresholds: Sequence[float] = COCO_IOU_THRESHOLDS,
    area: Optional[SizeBucket] = None,
    max_det: int = 100,
) -> float:
    """AP averaged over IoU thresholds, i.e. AP@[.5:.95] by default."""
    evals = evaluate_images(gts, dts, thresholds, area, max_det)
    aps = []
    for t in range(len(thresholds)):
        n_gt, flags = _pooled(evals, t)
        aps.append(interpolated_ap(flags, n_gt))
    return float(np.mean(aps))


def average_recall(
    gts: Boxes,
    dts: Boxes,
    iou_range: Sequence[float] = COCO_IOU_THRESHOLDS,
    max_det: int = 100,
    area: Optional[SizeBucket] = None,
) -> float:
    """Mean recall over the sampled IoU thresholds.

    Approximates twice the area under the recall-IoU curve on [0.5, 1].
    At most ``max_det`` top-scoring detections per image are kept.
    """
    if max_det < 1:
        raise ValueError("max_det must be positive")
    evals = evaluate_images(gts, dts, iou_range, area, max_det)
    recalls = []
    for t in range(len(iou_range)):
        n_gt = sum(e.n_gt for e in evals)
        if n_gt == 0:
            raise ValueError("no ground truth boxes: AP/AR undefined")
        tp = sum(int((e.matched[t] & ~e.ignored[t]).sum()) for e in evals)
        recalls.append(tp / n_gt)
    return float(np.mean(recalls))
