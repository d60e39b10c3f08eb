"""Desk-scale replicas of the flight experiments.

Each builder returns a :class:`Scenario`; the ``measure_*`` helpers run the
comparison the experiment is about and return plain numbers.
"""
from __future__ import annotations

import dataclasses
import math
from importlib import resources
from typing import Optional

import numpy as np

from ..allocation import fixtures
from ..allocation.model import AllocationProblem, Assignment
from ..allocation.solver import assign_detectors
from ..fusion.terrain import Ridge, Terrain
from .run import Report, run_experiment
from .scenario import PipelineConfig, Scenario, SyntheticDetectorSpec, Trajectory, WorldObject, dumps_scenario, read_scenario

ALTITUDE = 15.0
SPEED = 3.0
TILT_DEG = 45.0

# nine people scattered ahead of and beside a straight 100 m pass
EXP1_OBJECTS = (
    (-28.0, 4.5),
    (-17.0, -7.0),
    (-6.0, 2.0),
    (4.0, 6.5),
    (11.0, -3.5),
    (19.0, 6.0),
    (27.0, -6.5),
    (34.0, 1.0),
    (42.0, -5.5),
)
EXP1_SIZES = ((0.5, 1.75), (0.45, 1.6), (0.4, 1.3), (0.5, 1.7), (0.6, 1.85), (0.45, 1.55), (0.5, 1.7), (0.55, 1.8), (0.5, 1.8))


def field_terrain() -> Terrain:
    """Gently rolling 140 m x 80 m field."""
    return Terrain(
        -60.0,
        80.0,
        -40.0,
        40.0,
        0.0,
        (Ridge(10.0, 30.0, math.radians(10.0), 2.5, 6.0), Ridge(-40.0, -25.0, math.radians(-30.0), 1.5, 5.0)),
    )


def _flight(terrain: Terrain, x0=-55.0, x1=30.0, y=0.0) -> Trajectory:
    z0 = float(terrain.height(x0, y)) + ALTITUDE
    z1 = float(terrain.height(x1, y)) + ALTITUDE
    return Trajectory.from_waypoints([(x0, y, z0), (x1, y, z1)], SPEED, TILT_DEG)


def network_detector(det_id: str, accuracy: float, p_det_rel: Optional[float] = None) -> SyntheticDetectorSpec:
    """Synthetic behaviour derived from one scalar accuracy.

    The hit rate is a logistic curve in object pixel size whose midpoint
    moves to smaller objects as accuracy rises, so small objects separate
    detectors far more than large ones. Scores and false-alarm rates follow
    the accuracy as well.
    """
    a = float(accuracy)
    top = min(0.55 + 0.7 * a, 0.99)
    mid = 70.0 - 80.0 * a
    sizes = (8.0, 16.0, 24.0, 32.0, 48.0, 64.0, 96.0, 160.0)
    curve = tuple((s, round(top / (1.0 + math.exp(-(s - mid) / 6.0)), 4)) for s in sizes)
    return SyntheticDetectorSpec(
        id=det_id,
        accuracy=a,
        tp_curve=curve,
        fp_rate=round(max(0.02, 0.6 * (1.0 - a) - 0.15), 4),
        center_noise_px=1.5,
        scale_noise=0.05,
        tp_score=(round(0.25 + 0.9 * a, 4), 0.08),
        fp_score=(0.4, 0.08),
        p_det_rel=p_det_rel,
    )


def exp1_scenario(seed: int = 1, p_det_rel: float = 0.98) -> Scenario:
    terrain = field_terrain()
    objs = tuple(WorldObject(x, y, "person", w, h) for (x, y), (w, h) in zip(EXP1_OBJECTS, EXP1_SIZES))
    return Scenario(
        name="exp1",
        terrain=terrain,
        objects=objs,
        trajectory=_flight(terrain),
        detectors=(network_detector("irv2_lp", 0.60, p_det_rel),),
        frame_rate=5.0,
        seed=seed,
        pipeline=PipelineConfig(grid_res=0.5, p_positive_max=0.05, p_negative_max=0.05),
    )


def exp3_scenario(grid_res: float, seed: int = 1) -> Scenario:
    """Experiment-1 flight with exact poses at a given grid resolution."""
    sc = exp1_scenario(seed)
    return sc.replace(name=f"exp3_{grid_res:g}m", pipeline=dataclasses.replace(sc.pipeline, grid_res=grid_res, pose_noise_pos=0.0, pose_noise_ang_deg=0.0))


def exp2_scenario(p_negative_max: float, seed: int = 2) -> Scenario:
    """Hovering camera watching one person stand, then walk across the view."""
    terrain = Terrain(-30.0, 30.0, -30.0, 30.0)
    traj = Trajectory.from_waypoints([(-18.0, 0.0, ALTITUDE)], SPEED, TILT_DEG, yaw_deg=0.0, duration=20.0)
    walker = WorldObject(-3.0, -8.0, "person", 0.5, 1.7, path=((0.0, -3.0, -8.0), (4.0, -3.0, -8.0), (20.0, -3.0, 0.0)))
    return Scenario(
        name="exp2",
        terrain=terrain,
        objects=(walker,),
        trajectory=traj,
        detectors=(network_detector("irv2_lp", 0.60, 0.98),),
        frame_rate=5.0,
        seed=seed,
        pipeline=PipelineConfig(grid_res=0.5, p_positive_max=0.4, p_negative_max=p_negative_max),
    )


# ------------------------------------------------------------ bundled files

# file name -> builder; the shipped TOML must equal the builder output
BUNDLED = {
    "exp1.scenario.toml": lambda: exp1_scenario(),
    "exp2.scenario.toml": lambda: exp2_scenario(0.05),
}


def bundled_path(name: str):
    return resources.files("skit.data").joinpath(name)


def load_bundled(name: str) -> Scenario:
    """A scenario shipped with the package, e.g. ``"exp1"`` or ``"exp1.scenario.toml"``."""
    if not name.endswith(".toml"):
        name = f"{name}.scenario.toml"
    if name not in BUNDLED:
        raise KeyError(f"no bundled scenario {name!r}; have {sorted(BUNDLED)}")
    with resources.as_file(bundled_path(name)) as path:
        return read_scenario(path)


def regenerate_bundled(directory) -> list:
    """Write every bundled scenario from its builder into ``directory``."""
    from pathlib import Path

    out = []
    for name, build in BUNDLED.items():
        path = Path(directory) / name
        path.write_text(dumps_scenario(build()))
        out.append(path)
    return out


# -------------------------------------------------------------- allocation


def allocation_scenario(problem: AllocationProblem, assignment: Assignment, stream: Optional[str] = None, base: Optional[Scenario] = None) -> Scenario:
    """Instantiate only the detectors the allocation chose, on its cyclic schedule."""
    base = base or exp1_scenario()
    stream = stream or problem.streams[0]
    if not assignment.chosen:
        raise ValueError("allocation chose no detector")
    by_id = {d.id: d for d in problem.detectors}
    pool_max = max(a for a, _ in fixtures.detector_quality().values())
    dets = []
    for v, d_id, b in assignment.chosen:
        if v != stream:
            continue
        prof = by_id[d_id]
        acc = prof.accuracy[problem.bitrates.index(b)]
        dets.append(network_detector(d_id, acc, round(acc / pool_max, 6)))
    sched = assignment.schedule.get(stream, ())
    frames = {d.id: tuple(k for k, ids in enumerate(sched) if d.id in ids) for d in dets}
    return base.replace(
        detectors=tuple(dets),
        frame_rate=problem.processing_frame_rate,
        schedule=frames,
        schedule_horizon=max(len(sched), 1),
    )


def exp5_scenarios(time_budget: float = 10.0) -> list[tuple[AllocationProblem, Assignment, Scenario]]:
    out = []
    for case in (1, 2, 3):
        prob = fixtures.exp5_problem(case)
        a = assign_detectors(prob, time_budget)
        sc = allocation_scenario(prob, a)
        out.append((prob, a, sc.replace(name=f"exp5_case{case}")))
    return out


# ------------------------------------------------------------ measurements


def trail_cell_frames(sc: Scenario, radius: float = 3.0) -> int:
    """Cell-frames above threshold farther than ``radius`` from every object."""
    total = 0
    thr = sc.pipeline.threshold

    def hook(k, t, grid, truth):
        nonlocal total
        ii, jj = np.nonzero(grid.touched & (grid.P > thr))
        if ii.size == 0:
            return
        pts = np.stack([grid.xc[ii], grid.yc[jj]], axis=1)
        d = np.min(np.linalg.norm(pts[:, None, :] - truth[None, :, :2], axis=-1), axis=1)
        total += int(np.count_nonzero(d > radius))

    run_experiment(sc, hook)
    return total


def resolution_sweep(resolutions=(1.0, 0.5, 0.25), seed: int = 1) -> dict:
    return {r: run_experiment(exp3_scenario(r, seed)) for r in resolutions}


def fidelity_pair(seed: int = 1) -> tuple[Report, Report]:
    nominal = exp1_scenario(seed, 0.98)
    halved = exp1_scenario(seed, 0.49)
    return run_experiment(nominal), run_experiment(halved)
