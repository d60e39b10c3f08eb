"""Sensor model: probability updates, size window and range factor."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .camera import CameraModel

P_EPS = 1e-6
DEFAULT_CLAMP = 3.5
DEFAULT_MIN_PIXELS = 8.0


@dataclass(frozen=True)
class ObjectClassSpec:
    class_id: str
    obj_w_min: float
    obj_w_max: float
    obj_h_min: float
    obj_h_max: float
    significant_point: str = "bottom_center"
    tukey_alpha: float = 0.5

    def __post_init__(self):
        if not (0 < self.obj_w_min <= self.obj_w_max and 0 < self.obj_h_min <= self.obj_h_max):
            raise ValueError("need 0 < min <= max for both object dimensions")
        if self.significant_point not in ("bbox_center", "bottom_center"):
            raise ValueError(f"unknown significant point {self.significant_point!r}")
        if not 0.0 <= self.tukey_alpha <= 1.0:
            raise ValueError("tukey_alpha must lie in [0, 1]")


PERSON = ObjectClassSpec("person", 0.3, 1.2, 0.5, 2.2, "bottom_center", 0.5)


@dataclass(frozen=True)
class SensorModelParams:
    p_det_rel: float = 1.0
    p_positive_max: float = 0.3
    p_negative_max: float = 0.05
    clamp: float = DEFAULT_CLAMP
    min_pixels: float = DEFAULT_MIN_PIXELS

    def __post_init__(self):
        if not 0.0 <= self.p_det_rel <= 1.0:
            raise ValueError("p_det_rel must lie in [0, 1]")
        if not 0.0 <= self.p_positive_max <= 0.5 or not 0.0 <= self.p_negative_max <= 0.5:
            raise ValueError("p_positive_max and p_negative_max must lie in [0, 0.5]")
        if self.clamp <= 0:
            raise ValueError("clamp must be positive")


def relative_fidelity(accuracies) -> list[float]:
    """Normalise detector accuracies by the best one in the pool."""
    acc = [float(a) for a in accuracies]
    top = max(acc)
    return [a / top if top > 0 else 0.0 for a in acc]


# ------------------------------------------------------------------ log-odds


def log_odds(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("probability must lie strictly inside (0, 1)")
    out = np.log(p / (1.0 - p))
    return out if out.shape else float(out)


def probability(L):
    out = 1.0 / (1.0 + np.exp(-np.asarray(L, dtype=float)))
    return out if out.shape else float(out)


def shrink(p):
    """Pull a probability into ``[eps, 1 - eps]`` so its log-odds stay finite."""
    out = np.clip(np.asarray(p, dtype=float), P_EPS, 1.0 - P_EPS)
    return out if out.shape else float(out)


def log_odds_update(L, p_update, clamp: float = DEFAULT_CLAMP):
    """One additive log-odds update followed by clamping."""
    out = np.clip(np.asarray(L, dtype=float) + log_odds(p_update), -clamp, clamp)
    return out if out.shape else float(out)


# ------------------------------------------------------------- size window


def tukey_weight(x, x_min: float, x_max: float, alpha: float):
    """Cosine-tapered window over ``[x_min, x_max]``; zero outside."""
    if not x_min < x_max:
        raise ValueError("need x_min < x_max")
    x = np.asarray(x, dtype=float)
    t = (x - x_min) / (x_max - x_min)
    w = np.zeros_like(t)
    inside = (t >= 0.0) & (t <= 1.0)
    if alpha <= 0.0:
        w[inside] = 1.0
    else:
        half = alpha / 2.0
        lo = inside & (t < half)
        hi = inside & (1.0 - t < half)
        mid = inside & ~lo & ~hi
        w[mid] = 1.0
        w[lo] = 0.5 * (1.0 - np.cos(2.0 * np.pi * t[lo] / alpha))
        w[hi] = 0.5 * (1.0 - np.cos(2.0 * np.pi * (1.0 - t[hi]) / alpha))
    return w if w.shape else float(w)


def expected_bbox_extent(cls: ObjectClassSpec, cam: CameraModel, dist: float) -> tuple:
    """Detector-input pixel extents ``(min_w, max_w, min_h, max_h)`` at ``dist``."""
    if dist <= 0:
        raise ValueError("distance must be positive")
    kw = cam.input_w * cam.fx / (cam.calib_w * dist)
    kh = cam.input_h * cam.fy / (cam.calib_h * dist)
    return (kw * cls.obj_w_min, kw * cls.obj_w_max, kh * cls.obj_h_min, kh * cls.obj_h_max)


def bbox_area_factor(width: float, height: float, cls: ObjectClassSpec, cam: CameraModel, dist: float) -> float:
    """Geometric mean of the width and height windows."""
    w_min, w_max, h_min, h_max = expected_bbox_extent(cls, cam, dist)
    ww = tukey_weight(width, w_min, w_max, cls.tukey_alpha) if w_max > w_min else float(width == w_min)
    wh = tukey_weight(height, h_min, h_max, cls.tukey_alpha) if h_max > h_min else float(height == h_min)
    return math.sqrt(ww * wh)


def max_distance(cls: ObjectClassSpec, cam: CameraModel, min_pixels: float = DEFAULT_MIN_PIXELS) -> float:
    """Range at which the smallest object shrinks to ``min_pixels`` on either axis."""
    dw = cam.input_w * cam.fx * cls.obj_w_min / (cam.calib_w * min_pixels)
    dh = cam.input_h * cam.fy * cls.obj_h_min / (cam.calib_h * min_pixels)
    return min(dw, dh)


def distance_factor(dist, max_dist: float):
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < 0):
        raise ValueError("distance must be non-negative")
    out = np.maximum(1.0 - dist / max_dist, 0.0)
    return out if out.shape else float(out)


def p_positive(area_factor, p_det_rel, score, p_positive_max):
    return 0.5 + area_factor * p_det_rel * score * p_positive_max


def p_negative(dist_factor, p_det_rel, p_negative_max):
    return 0.5 - dist_factor * p_det_rel * p_negative_max
