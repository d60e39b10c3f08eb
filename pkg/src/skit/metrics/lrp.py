"""Localization-Recall-Precision error and its optimal-threshold variant."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

import numpy as np

from .boxes import as_array, iou_matrix
from .coco import Boxes, as_images
from .matching import greedy_assign, score_order


@dataclass(frozen=True)
class LRPResult:
    lrp: float
    lrp_iou: float  # nan without true positives
    lrp_fp: float  # nan without surviving detections
    lrp_fn: float
    n_tp: int
    n_fp: int
    n_fn: int
    iou_sum: float  # sum of (1 - IoU) over true positives

    def recombined(self, tau: float) -> float:
        """The same error rebuilt from the weighted components."""
        n_kept = self.n_tp + self.n_fp
        n_gt = self.n_tp + self.n_fn
        z = self.n_tp + self.n_fp + self.n_fn
        w_iou = self.n_tp / (1.0 - tau)
        total = 0.0
        if self.n_tp:
            total += w_iou * self.lrp_iou
        if n_kept:
            total += n_kept * self.lrp_fp
        if n_gt:
            total += n_gt * self.lrp_fn
        return total / z


def _counts(gts: Boxes, dts: Boxes, s: float, tau: float):
    n_tp = n_fp = n_fn = 0
    iou_sum = 0.0
    for _, g, d in as_images(gts, dts):
        kept = [b for b in d if (b.score if b.score is not None else 0.0) > s]
        ious = iou_matrix(as_array(kept), as_array(g))
        order = score_order([b.score for b in kept])
        dt_match, _ = greedy_assign(ious, order, tau)
        tp = 0
        for di, gi in enumerate(dt_match):
            if gi >= 0:
                tp += 1
                iou_sum += 1.0 - ious[di, gi]
        n_tp += tp
        n_fp += len(kept) - tp
        n_fn += len(g) - tp
    return n_tp, n_fp, n_fn, iou_sum


def lrp_error(gts: Boxes, dts: Boxes, s: float = 0.0, tau: float = 0.5) -> LRPResult:
    """LRP error of detections scoring strictly above ``s``.

    Combined form: ``(sum(1-IoU)/(1-tau) + N_FP + N_FN) / (N_TP + N_FP + N_FN)``.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"score threshold {s} outside [0, 1]")
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"IoU threshold {tau} outside [0, 1)")
    n_tp, n_fp, n_fn, iou_sum = _counts(gts, dts, s, tau)
    z = n_tp + n_fp + n_fn
    if z == 0:
        raise ValueError("LRP undefined: no ground truth and no detections")
    lrp = (iou_sum / (1.0 - tau) + n_fp + n_fn) / z
    return LRPResult(
        lrp=lrp,
        lrp_iou=iou_sum / n_tp if n_tp else math.nan,
        lrp_fp=n_fp / (n_tp + n_fp) if n_tp + n_fp else math.nan,
        lrp_fn=n_fn / (n_tp + n_fn) if n_tp + n_fn else math.nan,
        n_tp=n_tp,
        n_fp=n_fp,
        n_fn=n_fn,
        iou_sum=iou_sum,
    )


@dataclass(frozen=True)
class OLRPResult:
    olrp: float
    s_opt: float
    components: LRPResult
    unreliable: bool  # optimum sits at the lowest available cutoff


def default_score_grid(dts: Boxes) -> list[float]:
    """0 plus every distinct detection score, ascending.

    LRP is piecewise constant between consecutive scores, so the sweep over
    this grid is exact.
    """
    groups = dts.values() if isinstance(dts, Mapping) else [dts]
    scores = {b.score for group in groups for b in group if b.score is not None}
    return sorted({0.0} | scores)


def _above(dts: Boxes, cutoff: float) -> Boxes:
    if isinstance(dts, Mapping):
        return {k: [b for b in v if (b.score or 0.0) >= cutoff] for k, v in dts.items()}
    return [b for b in dts if (b.score or 0.0) >= cutoff]


def olrp(
    gts: Boxes,
    dts: Boxes,
    tau: float = 0.5,
    score_grid: Optional[Iterable[float]] = None,
    cutoff: Optional[float] = None,
) -> OLRPResult:
    """Minimum LRP over score thresholds.

    ``cutoff`` is the detector's own reporting floor (0.3 for the networks in
    the evaluation). Detections below it are dropped and the lowest grid
    point, which keeps every remaining detection, is reported as ``cutoff``.
    An optimum at that lowest point is flagged unreliable: the true optimum
    would lie below what the detector reports. Ties resolve to the smallest
    threshold.
    """
    if cutoff is not None:
        dts = _above(dts, cutoff)
    grid = default_score_grid(dts) if score_grid is None else sorted(set(score_grid))
    if not grid:
        raise ValueError("empty score grid")
    best: Optional[LRPResult] = None
    best_s = grid[0]
    for s in grid:
        r = lrp_error(gts, dts, s, tau)
        if best is None or r.lrp < best.lrp:
            best, best_s = r, s
    unreliable = best_s == grid[0]
    if unreliable and cutoff is not None:
        best_s = cutoff
    return OLRPResult(olrp=best.lrp, s_opt=best_s, components=best, unreliable=unreliable)


def olrp_sweep(gts: Boxes, dts: Boxes, tau: float = 0.5) -> np.ndarray:
    """``(s, lrp)`` rows over the default grid, for plotting."""
    grid = default_score_grid(dts)
    return np.array([(s, lrp_error(gts, dts, s, tau).lrp) for s in grid])


__all__ = ["LRPResult", "OLRPResult", "lrp_error", "olrp", "olrp_sweep", "default_score_grid", "score_order"]
