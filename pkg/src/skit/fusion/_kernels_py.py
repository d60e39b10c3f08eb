"""Numpy reference for the terrain self-occlusion march.

The compiled twin in ``_kernels.pyx`` performs the same floating-point
operations in the same order, so both return identical masks.
"""
from __future__ import annotations

import numpy as np


def occluded(targets: np.ndarray, cam: np.ndarray, tops: np.ndarray, x0: float, y0: float, res: float, max_top: float) -> np.ndarray:
    """Boolean mask: is the segment from each target to the camera blocked?

    ``targets`` is ``(n, 3)`` (usually top-face centers). The segment is
    sampled every ``res/2`` of horizontal travel until it rises above
    ``max_top`` or leaves the grid. A sample in a column other than the
    target's own that lies below that column's top face blocks the view.
    """
    targets = np.ascontiguousarray(targets, dtype=np.float64).reshape(-1, 3)
    tops = np.ascontiguousarray(tops, dtype=np.float64)
    nx, ny = tops.shape
    px, py, pz = targets[:, 0], targets[:, 1], targets[:, 2]
    dx = cam[0] - px
    dy = cam[1] - py
    dz = cam[2] - pz
    out = dz <= 0.0
    L = np.sqrt(dx * dx + dy * dy)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_max = np.where(max_top > pz, (max_top - pz) / dz, 0.0)
        s_max = np.minimum(s_max, 1.0)
        ds = (0.5 * res) / L
        n = np.where((L > 0.0) & ~out, np.ceil(s_max / ds), 0.0)
    n = np.nan_to_num(n, nan=0.0).astype(np.int64)
    ta = np.floor((px - x0) / res).astype(np.int64)
    tb = np.floor((py - y0) / res).astype(np.int64)

    live = np.nonzero(n > 0)[0]
    k = 1
    while live.size:
        s = k * ds[live]
        qx = px[live] + s * dx[live]
        qy = py[live] + s * dy[live]
        qz = pz[live] + s * dz[live]
        a = np.floor((qx - x0) / res).astype(np.int64)
        b = np.floor((qy - y0) / res).astype(np.int64)
        inb = (a >= 0) & (a < nx) & (b >= 0) & (b < ny)
        same = (a == ta[live]) & (b == tb[live])
        check = inb & ~same
        hit = np.zeros(live.size, dtype=bool)
        hit[check] = qz[check] < tops[a[check], b[check]] - 1e-9
        out[live[hit]] = True
        keep = inb & ~hit & (k < n[live])
        live = live[keep]
        k += 1
    return out
