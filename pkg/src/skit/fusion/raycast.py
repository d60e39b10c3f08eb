"""Ray intersection with the stepped 2.5D surface of a grid."""
from __future__ import annotations

from typing import Optional

import numpy as np

from .grid import VoxelGrid

BISECT_TOL = 0.01


def _below(grid: VoxelGrid, q: np.ndarray) -> Optional[tuple[int, int]]:
    ix, iy = grid.cell_of(q[0], q[1])
    ix, iy = int(ix), int(iy)
    if not (0 <= ix < grid.nx and 0 <= iy < grid.ny):
        return None
    return (ix, iy) if q[2] <= grid.top[ix, iy] else None


def cast_ray(grid: VoxelGrid, origin, direction, tol: float = BISECT_TOL):
    """First surface crossing along ``origin + t*direction``, ``t > 0``.

    Marches at half the grid resolution through the height band spanned by
    the cell tops, then bisects the bracketing step down to ``tol`` meters.
    Returns ``(point, (ix, iy))`` or ``None`` when the ray misses the grid.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if d[2] >= 0.0:
        return None
    step = 0.5 * grid.res
    t0 = max(0.0, (o[2] - grid.max_top) / -d[2])
    t1 = (o[2] - grid.min_top) / -d[2] + step
    prev = t0
    t = t0
    while t <= t1:
        if _below(grid, o + t * d) is not None:
            lo, hi = (t, t) if t == t0 else (prev, t)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _below(grid, o + mid * d) is not None:
                    hi = mid
                else:
                    lo = mid
            q = o + hi * d
            cell = _below(grid, q)
            return q, cell
        prev = t
        t += step
    return None
