"""Salient locations: threshold the grid, cluster the survivors, summarise."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .fusion.grid import VoxelGrid

DEFAULT_THRESHOLD = 0.75
DEFAULT_LINK = 2.0


@dataclass
class SalientLocation:
    position: np.ndarray
    probability: float
    cell_count: int
    cells: list = field(default_factory=list)
    points: list = field(default_factory=list)


def threshold_grid(grid: VoxelGrid, threshold: float = DEFAULT_THRESHOLD) -> list[tuple[int, int]]:
    """Touched cells with probability strictly above ``threshold``, row-major order."""
    if not 0.5 < threshold < 1.0:
        raise ValueError("threshold must lie in (0.5, 1)")
    ii, jj = np.nonzero(grid.touched & (grid.P > threshold))
    return [(int(i), int(j)) for i, j in zip(ii, jj)]


def euclidean_clusters(points, max_link_dist: float = DEFAULT_LINK) -> list[list[int]]:
    """Single-linkage components: indices joined by any chain of links ``<= max_link_dist``.

    Clusters are sorted lists, ordered by their smallest index.
    """
    if max_link_dist <= 0:
        raise ValueError("max_link_dist must be positive")
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return []
    pts = pts.reshape(n, -1)
    pairs = cKDTree(pts).query_pairs(max_link_dist, output_type="ndarray")
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else coo_matrix((n, n))
    _, labels = connected_components(adj, directed=False)
    groups: dict = {}
    for i, lab in enumerate(labels):
        groups.setdefault(int(lab), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def salient_locations(grid: VoxelGrid, threshold: float = DEFAULT_THRESHOLD, max_link_dist: float = DEFAULT_LINK) -> list[SalientLocation]:
    cells = threshold_grid(grid, threshold)
    if not cells:
        return []
    centers = np.array([grid.center(i, j) for i, j in cells])
    out = []
    for members in euclidean_clusters(centers, max_link_dist):
        cl = [cells[m] for m in members]
        probs = [grid.probability_at(i, j) for i, j in cl]
        pts = [p for c in cl for p in grid.hits.get(c, [])]
        pos = np.mean(pts, axis=0) if pts else centers[members].mean(axis=0)
        out.append(SalientLocation(np.asarray(pos, float), float(np.mean(probs)), len(cl), cl, pts))
    return out


def write_salient(path, locations: list[SalientLocation]) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["x", "y", "z", "probability", "cell_count"])
        for s in locations:
            wr.writerow([f"{s.position[0]:.4f}", f"{s.position[1]:.4f}", f"{s.position[2]:.4f}", f"{s.probability:.6f}", s.cell_count])


def format_report(locations: list[SalientLocation]) -> str:
    if not locations:
        return "no salient locations\n"
    lines = [f"{len(locations)} salient location(s)"]
    for k, s in enumerate(locations):
        x, y, z = s.position
        lines.append(f"  #{k:<3d} ({x:8.2f}, {y:8.2f}, {z:6.2f})  P={s.probability:.3f}  cells={s.cell_count}")
    return "\n".join(lines) + "\n"
