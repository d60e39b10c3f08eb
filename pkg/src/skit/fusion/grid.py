"""2.5D saliency grid: one voxel per (x, y) column, sitting on the terrain."""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Optional

import numpy as np

from .sensor import DEFAULT_CLAMP, probability
from .terrain import Terrain


class VoxelGrid:
    """Log-odds per surface voxel, stored densely with a ``touched`` mask.

    Column ``(ix, iy)`` covers ``[x0 + ix*res, x0 + (ix+1)*res)`` in x (same
    for y). Its voxel index is ``iz = floor(h/res + 0.5)`` for the terrain
    height ``h`` at the column center, so the voxel spans
    ``[(iz-0.5)*res, (iz+0.5)*res]`` and its top face is at ``(iz+0.5)*res``.
    """

    def __init__(self, terrain: Terrain, resolution: float, clamp: float = DEFAULT_CLAMP):
        if resolution <= 0:
            raise ValueError("resolution must be positive")
        self.terrain = terrain
        self.res = float(resolution)
        self.clamp = float(clamp)
        self.x0, self.y0 = float(terrain.x_min), float(terrain.y_min)
        self.nx = max(1, math.ceil((terrain.x_max - terrain.x_min) / self.res - 1e-9))
        self.ny = max(1, math.ceil((terrain.y_max - terrain.y_min) / self.res - 1e-9))
        self.xc = self.x0 + (np.arange(self.nx) + 0.5) * self.res
        self.yc = self.y0 + (np.arange(self.ny) + 0.5) * self.res
        X, Y = np.meshgrid(self.xc, self.yc, indexing="ij")
        h = np.asarray(terrain.height(X, Y), dtype=float).reshape(self.nx, self.ny)
        self.iz = np.floor(h / self.res + 0.5).astype(np.int64)
        self.zc = self.iz * self.res
        self.top = (self.iz + 0.5) * self.res
        self.max_top = float(self.top.max())
        self.min_top = float(self.top.min())
        self.L = np.zeros((self.nx, self.ny))
        self.touched = np.zeros((self.nx, self.ny), dtype=bool)
        self.hits: dict = {}

    # ----------------------------------------------------------- geometry
    @property
    def shape(self) -> tuple[int, int]:
        return self.nx, self.ny

    def cell_of(self, x, y):
        ix = np.floor((np.asarray(x) - self.x0) / self.res).astype(np.int64)
        iy = np.floor((np.asarray(y) - self.y0) / self.res).astype(np.int64)
        return ix, iy

    def in_bounds(self, ix, iy):
        return (ix >= 0) & (ix < self.nx) & (iy >= 0) & (iy < self.ny)

    def center(self, ix: int, iy: int) -> np.ndarray:
        return np.array([self.xc[ix], self.yc[iy], self.zc[ix, iy]])

    def top_center(self, ix: int, iy: int) -> np.ndarray:
        return np.array([self.xc[ix], self.yc[iy], self.top[ix, iy]])

    def top_centers(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xc, self.yc, indexing="ij")
        return np.stack([X, Y, self.top], axis=-1)

    # -------------------------------------------------------------- state
    @property
    def P(self) -> np.ndarray:
        return probability(self.L)

    def probability_at(self, ix: int, iy: int) -> float:
        return float(probability(self.L[ix, iy]))

    def add_log_odds(self, ix, iy, delta) -> None:
        """Add ``delta`` to the listed cells and clamp. Zero deltas leave cells untouched.

        Indices must be unique within one call.
        """
        ix = np.atleast_1d(np.asarray(ix, dtype=np.int64))
        iy = np.atleast_1d(np.asarray(iy, dtype=np.int64))
        delta = np.broadcast_to(np.asarray(delta, dtype=float), ix.shape)
        nz = delta != 0.0
        if not np.any(nz):
            return
        ix, iy, delta = ix[nz], iy[nz], delta[nz]
        self.L[ix, iy] = np.clip(self.L[ix, iy] + delta, -self.clamp, self.clamp)
        self.touched[ix, iy] = True

    def record_hit(self, ix: int, iy: int, point) -> None:
        self.hits.setdefault((int(ix), int(iy)), []).append(tuple(float(c) for c in point))

    @property
    def cells(self) -> dict:
        """Sparse view: ``{(ix, iy, iz): log_odds}`` for every touched cell."""
        ii, jj = np.nonzero(self.touched)
        return {(int(i), int(j), int(self.iz[i, j])): float(self.L[i, j]) for i, j in zip(ii, jj)}

    def copy(self) -> "VoxelGrid":
        g = VoxelGrid.__new__(VoxelGrid)
        g.__dict__.update(self.__dict__)
        g.L = self.L.copy()
        g.touched = self.touched.copy()
        g.hits = {k: list(v) for k, v in self.hits.items()}
        return g

    # ------------------------------------------------------------- export
    def to_csv(self, path) -> None:
        write_grid(self, path)


def write_grid(grid: VoxelGrid, path) -> None:
    """Touched cells as ``ix, iy, x, y, z, log_odds, probability`` rows."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# resolution={grid.res!r}\n")
        fh.write(f"# origin={grid.x0!r},{grid.y0!r}\n")
        fh.write(f"# clamp={grid.clamp!r}\n")
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["ix", "iy", "x", "y", "z", "log_odds", "probability"])
        ii, jj = np.nonzero(grid.touched)
        for i, j in zip(ii, jj):
            L = float(grid.L[i, j])
            wr.writerow([int(i), int(j), repr(float(grid.xc[i])), repr(float(grid.yc[j])), repr(float(grid.zc[i, j])), repr(L), repr(float(probability(L)))])


def read_grid(path, terrain: Terrain) -> VoxelGrid:
    """Rebuild a grid from :func:`write_grid` output over the same terrain."""
    header = {}
    rows = []
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    body = []
    for ln in lines:
        if ln.startswith("#"):
            key, _, val = ln[1:].strip().partition("=")
            header[key] = val
        elif ln.strip():
            body.append(ln)
    for r in csv.DictReader(body):
        rows.append(r)
    res = float(header["resolution"])
    x0, y0 = (float(v) for v in header["origin"].split(","))
    grid = VoxelGrid(terrain, res, float(header.get("clamp", DEFAULT_CLAMP)))
    if abs(grid.x0 - x0) > 1e-9 or abs(grid.y0 - y0) > 1e-9:
        raise ValueError("grid origin does not match the terrain")
    for r in rows:
        i, j = int(r["ix"]), int(r["iy"])
        if abs(grid.zc[i, j] - float(r["z"])) > 1e-9:
            raise ValueError(f"cell ({i}, {j}) height does not match the terrain")
        grid.L[i, j] = float(r["log_odds"])
        grid.touched[i, j] = True
    return grid
