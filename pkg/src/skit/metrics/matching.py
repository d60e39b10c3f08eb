"""Greedy COCO-style assignment of detections to ground truth."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .boxes import BoundingBox, as_array, iou_matrix


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]  # (gt_index, dt_index, iou)
    n_tp: int
    n_fp: int
    n_fn: int

    @property
    def ious(self) -> list[float]:
        return [p[2] for p in self.pairs]


def score_order(scores: Sequence[float]) -> np.ndarray:
    """Indices by descending score; equal scores keep ascending index order."""
    scores = np.asarray(scores, dtype=float)
    return np.lexsort((np.arange(len(scores)), -scores))


def greedy_assign(
    ious: np.ndarray,
    order: Sequence[int],
    tau: float,
    gt_ignore: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Walk detections in ``order`` and give each the best free ground truth.

    A pair needs ``iou >= tau`` and a non-empty overlap. Among free ground
    truths with equal IoU the lowest index wins. Ignored ground truths are
    only considered when no regular one qualifies (COCO crowd/area rule).

    Returns ``(dt_match, gt_match)`` holding the partner index or -1.
    """
    n_dt, n_gt = ious.shape
    if gt_ignore is None:
        gt_ignore = np.zeros(n_gt, dtype=bool)
    gt_order = np.argsort(gt_ignore, kind="stable")
    dt_match = np.full(n_dt, -1, dtype=int)
    gt_match = np.full(n_gt, -1, dtype=int)
    for d in order:
        best = -1
        best_iou = tau
        row = ious[d]
        for g in gt_order:
            if gt_match[g] >= 0:
                continue
            if best >= 0 and not gt_ignore[best] and gt_ignore[g]:
                break
            v = row[g]
            if v <= 0.0:
                continue
            if (v >= best_iou) if best < 0 else (v > best_iou):
                best, best_iou = g, v
        if best >= 0:
            dt_match[d] = best
            gt_match[best] = d
    return dt_match, gt_match


def match_detections(
    gts: Sequence[BoundingBox], dts: Sequence[BoundingBox], tau: float
) -> MatchResult:
    """Match one image's detections to its ground truth at IoU threshold ``tau``.

    Duplicates on an already matched ground truth count as false positives.
    """
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"IoU threshold {tau} outside [0, 1)")
    ious = iou_matrix(as_array(dts), as_array(gts))
    order = score_order([d.score if d.score is not None else 0.0 for d in dts])
    dt_match, gt_match = greedy_assign(ious, order, tau)
    pairs = tuple(
        sorted((int(g), int(d), float(ious[d, g])) for d, g in enumerate(dt_match) if g >= 0)
    )
    n_tp = len(pairs)
    return MatchResult(pairs=pairs, n_tp=n_tp, n_fp=len(dts) - n_tp, n_fn=len(gts) - n_tp)


def precision_recall(m: MatchResult) -> tuple[float, float]:
    """Precision and recall; a zero denominator yields 0."""
    precision = m.n_tp / (m.n_tp + m.n_fp) if m.n_tp + m.n_fp > 0 else 0.0
    recall = m.n_tp / (m.n_tp + m.n_fn) if m.n_tp + m.n_fn > 0 else 0.0
    return precision, recall
