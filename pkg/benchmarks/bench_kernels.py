"""Compare the numpy and compiled terrain-occlusion kernels.

Run from the repository root after installing the package::

    python benchmarks/bench_kernels.py [--repeat 5] [--res 0.5 0.25]

For each grid resolution the benchmark builds the field terrain used by the
flight replicas, places an oblique camera over it, and times one occlusion
query for every grid cell. It also checks that both backends return the
same mask.
"""
from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from skit.fusion import VoxelGrid
from skit.fusion.kernels import available_backends
from skit.sim.experiments import field_terrain


def workload(res: float):
    grid = VoxelGrid(field_terrain(), res)
    ii, jj = np.meshgrid(np.arange(grid.nx), np.arange(grid.ny), indexing="ij")
    targets = np.stack([grid.xc[ii].ravel(), grid.yc[jj].ravel(), grid.top[ii, jj].ravel()], axis=1)
    cam = np.array([-20.0, 0.0, 15.0 + float(field_terrain().height(-20.0, 0.0))])
    args = (targets, cam, grid.top, grid.x0, grid.y0, grid.res, grid.max_top)
    return grid, args


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--res", type=float, nargs="+", default=[1.0, 0.5, 0.25])
    a = ap.parse_args(argv)
    backends = available_backends()
    if "cython" not in backends:
        print("compiled kernel not built; timing the numpy backend only")
    print(f"{'res_m':>6} {'cells':>8} " + " ".join(f"{name + '_ms':>12}" for name in backends) + f" {'speedup':>8} {'same':>5}")
    for res in a.res:
        grid, args = workload(res)
        times, masks = {}, {}
        for name, fn in backends.items():
            masks[name] = fn(*args)
            number = 1
            times[name] = min(timeit.repeat(lambda: fn(*args), number=number, repeat=a.repeat)) / number
        same = all(np.array_equal(masks["python"], m) for m in masks.values())
        speed = times["python"] / times["cython"] if "cython" in times else math.nan
        print(f"{res:6.2f} {grid.nx * grid.ny:8d} " + " ".join(f"{times[n] * 1e3:12.1f}" for n in backends) + f" {speed:8.1f} {str(same):>5}")


if __name__ == "__main__":
    main()
