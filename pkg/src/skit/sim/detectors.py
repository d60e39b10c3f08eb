"""Synthetic detector: turns ideal projections into noisy scored boxes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..fusion.camera import CameraModel
from ..fusion.update import Detection
from ..metrics.boxes import BoundingBox
from .render import Projection
from .scenario import SyntheticDetectorSpec

# false-positive box sizes (sqrt area, px) and width/height ratio
FP_SIZE = (16.0, 96.0)
FP_ASPECT = 0.4


@dataclass(frozen=True)
class SampledDetection:
    detection: Detection
    truth: Optional[int]  # object index for true positives, None for false positives


def frame_rng(seed: int, frame: int, detector: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, frame, detector]))


def _score(rng, mean_std) -> float:
    mean, std = mean_std
    s = mean + std * rng.standard_normal() if std > 0 else mean
    return float(min(max(s, 0.0), 1.0))


def _clip_box(x0, y0, x1, y1, w, h):
    x0, y0 = max(x0, 0.0), max(y0, 0.0)
    x1, y1 = min(x1, float(w)), min(y1, float(h))
    if x1 - x0 < 1.0 or y1 - y0 < 1.0:
        return None
    return x0, y0, x1, y1


def sample_detections(
    spec: SyntheticDetectorSpec,
    projections: list[Projection],
    rng: np.random.Generator,
    cam: CameraModel,
    timestamp: float = 0.0,
) -> list[SampledDetection]:
    """Bernoulli hits by size, box noise, then a Poisson number of false alarms.

    The random stream is consumed in a fixed order so a given generator
    state always yields the same boxes.
    """
    out = []
    for p in projections:
        hit = rng.random() < float(spec.tp_rate(p.size))
        noise = rng.standard_normal(3)
        score = _score(rng, spec.tp_score)
        if not hit or score < spec.score_cutoff:
            continue
        x0, y0, x1, y1 = p.bbox
        cx = 0.5 * (x0 + x1) + spec.center_noise_px * noise[0]
        cy = 0.5 * (y0 + y1) + spec.center_noise_px * noise[1]
        k = max(1.0 + spec.scale_noise * noise[2], 0.1)
        hw, hh = 0.5 * (x1 - x0) * k, 0.5 * (y1 - y0) * k
        box = _clip_box(cx - hw, cy - hh, cx + hw, cy + hh, cam.input_w, cam.input_h)
        if box is None:
            continue
        out.append(SampledDetection(Detection(BoundingBox(*box, spec.class_id, score), score, spec.id, timestamp), p.index))
    n_fp = int(rng.poisson(spec.fp_rate)) if spec.fp_rate > 0 else 0
    for _ in range(n_fp):
        cx, cy = rng.uniform(0, cam.input_w), rng.uniform(0, cam.input_h)
        size = math.exp(rng.uniform(math.log(FP_SIZE[0]), math.log(FP_SIZE[1])))
        score = _score(rng, spec.fp_score)
        if score < spec.score_cutoff:
            continue
        hw = 0.5 * size * math.sqrt(FP_ASPECT)
        hh = 0.5 * size / math.sqrt(FP_ASPECT)
        box = _clip_box(cx - hw, cy - hh, cx + hw, cy + hh, cam.input_w, cam.input_h)
        if box is None:
            continue
        out.append(SampledDetection(Detection(BoundingBox(*box, spec.class_id, score), score, spec.id, timestamp), None))
    return out
