"""End-to-end replay: render, detect, fuse, extract, score."""
from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.spatial.transform import Rotation

from .. import __version__
from ..fusion.grid import VoxelGrid, write_grid
from ..fusion.update import update_from_frame
from ..salient import SalientLocation, salient_locations, write_salient
from .detectors import frame_rng, sample_detections
from .render import render_frame
from .scenario import Scenario, dumps_scenario

# stream id for pose noise, kept apart from detector indices
_POSE_STREAM = 1_000_003


@dataclass
class Report:
    scenario: str
    n_frames: int
    salient: list
    matches: list  # (object index, salient index, error meters)
    missed: list  # object indices without a salient location
    false_locations: list  # salient indices without an object
    detections: list  # (frame, detector, object index or -1, score)
    grid: VoxelGrid
    truth: np.ndarray
    timings: dict = field(default_factory=dict)
    confidence: list = field(default_factory=list)  # peak P near each object

    @property
    def mean_probability(self) -> float:
        return float(np.mean([s.probability for s in self.salient])) if self.salient else 0.0

    @property
    def mean_error(self) -> float:
        return float(np.mean([m[2] for m in self.matches])) if self.matches else math.nan

    @property
    def mean_confidence(self) -> float:
        """Object-averaged peak probability; compares runs on the same objects."""
        return float(np.mean(self.confidence)) if self.confidence else 0.0

    @property
    def n_true_positive(self) -> int:
        return len(self.matches)

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "frames": self.n_frames,
            "objects": int(len(self.truth)),
            "salient": len(self.salient),
            "matched": len(self.matches),
            "missed": len(self.missed),
            "false_locations": len(self.false_locations),
            "mean_probability": round(self.mean_probability, 6),
            "mean_confidence": round(self.mean_confidence, 6),
        "mean_error_m": None if math.isnan(self.mean_error) else round(self.mean_error, 6),
            "detections": len(self.detections),
            "true_positive_detections": sum(1 for d in self.detections if d[2] >= 0),
        }


def match_locations(truth: np.ndarray, salient: list[SalientLocation], radius: float):
    """Greedy nearest pairs within ``radius``; ties fall to the lower indices."""
    pairs = []
    for i, g in enumerate(truth):
        for j, s in enumerate(salient):
            d = float(np.linalg.norm(np.asarray(s.position) - g))
            if d <= radius:
                pairs.append((d, i, j))
    pairs.sort()
    used_g, used_s, matches = set(), set(), []
    for d, i, j in pairs:
        if i in used_g or j in used_s:
            continue
        used_g.add(i)
        used_s.add(j)
        matches.append((i, j, d))
    matches.sort()
    missed = [i for i in range(len(truth)) if i not in used_g]
    false = [j for j in range(len(salient)) if j not in used_s]
    return matches, missed, false


def _noisy_camera(cam, sc: Scenario, frame: int):
    pipe = sc.pipeline
    if pipe.pose_noise_pos == 0 and pipe.pose_noise_ang_deg == 0:
        return cam
    rng = frame_rng(sc.seed, frame, _POSE_STREAM)
    dp = pipe.pose_noise_pos * rng.standard_normal(3)
    rv = np.radians(pipe.pose_noise_ang_deg) * rng.standard_normal(3)
    R = Rotation.from_rotvec(rv).as_matrix() @ cam.R
    return cam.with_pose(cam.position + dp, R)


def object_confidence(grid: VoxelGrid, truth: np.ndarray, radius: float) -> list:
    """Highest cell probability within ``radius`` (xy) of each object.

    Cells never observed count as the 0.5 prior.
    """
    out = []
    for g in truth:
        i0, j0 = grid.cell_of(g[0] - radius, g[1] - radius)
        i1, j1 = grid.cell_of(g[0] + radius, g[1] + radius)
        i0, j0 = max(i0, 0), max(j0, 0)
        i1, j1 = min(i1, grid.nx - 1), min(j1, grid.ny - 1)
        best = 0.5
        if i1 >= i0 and j1 >= j0:
            dx = grid.xc[i0 : i1 + 1, None] - g[0]
            dy = grid.yc[None, j0 : j1 + 1] - g[1]
            near = (dx * dx + dy * dy <= radius * radius) & grid.touched[i0 : i1 + 1, j0 : j1 + 1]
            if near.any():
                best = max(best, float(grid.P[i0 : i1 + 1, j0 : j1 + 1][near].max()))
        out.append(best)
    return out


FrameHook = Callable[[int, float, VoxelGrid, np.ndarray], None]


def truth_positions(sc: Scenario, t: float) -> np.ndarray:
    pts = []
    for o in sc.objects:
        x, y = o.xy(t)
        pts.append((x, y, float(sc.terrain.height(x, y))))
    return np.array(pts, dtype=float).reshape(-1, 3)


def run_experiment(sc: Scenario, frame_hook: Optional[FrameHook] = None) -> Report:
    """Replay every frame of ``sc`` through detection and fusion.

    Ground truth for scoring is the object positions at the last frame.
    ``frame_hook(frame, t, grid, truth)`` runs after each fused frame.
    """
    pipe = sc.pipeline
    grid = VoxelGrid(sc.terrain, pipe.grid_res, pipe.clamp)
    params = {d.id: pipe.sensor_params(sc.p_det_rel(d)) for d in sc.detectors}
    log = []
    timings = {"render": 0.0, "detect": 0.0, "fuse": 0.0}
    n = sc.n_frames
    t = sc.frame_time(0)
    for k in range(n):
        t = sc.frame_time(k)
        t0 = time.perf_counter()
        cam, projections = render_frame(sc, t)
        timings["render"] += time.perf_counter() - t0
        fuse_cam = _noisy_camera(cam, sc, k)
        for di, spec in enumerate(sc.detectors):
            if not sc.active(spec.id, k):
                continue
            t0 = time.perf_counter()
            objs = [p for p in projections if sc.objects[p.index].class_id == spec.class_id]
            sampled = sample_detections(spec, objs, frame_rng(sc.seed, k, di), cam, t)
            timings["detect"] += time.perf_counter() - t0
            t0 = time.perf_counter()
            update_from_frame(grid, [s.detection for s in sampled], fuse_cam, sc.class_spec(spec.class_id), params[spec.id])
            timings["fuse"] += time.perf_counter() - t0
            log.extend((k, spec.id, -1 if s.truth is None else s.truth, s.detection.score) for s in sampled)
        if frame_hook is not None:
            frame_hook(k, t, grid, truth_positions(sc, t))
    t0 = time.perf_counter()
    salient = salient_locations(grid, pipe.threshold, pipe.link_dist)
    truth = truth_positions(sc, t)
    matches, missed, false = match_locations(truth, salient, pipe.match_radius)
    conf = object_confidence(grid, truth, pipe.match_radius)
    timings["extract"] = time.perf_counter() - t0
    return Report(sc.name, n, salient, matches, missed, false, log, grid, truth, timings, conf)


# ------------------------------------------------------------------ output


def config_hash(sc: Scenario) -> str:
    return hashlib.sha256(dumps_scenario(sc).encode()).hexdigest()


def write_errors(path, report: Report) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["object", "salient", "gt_x", "gt_y", "gt_z", "x", "y", "z", "error_m", "status"])
        for i, j, d in report.matches:
            g, s = report.truth[i], report.salient[j].position
            wr.writerow([i, j, *(f"{c:.4f}" for c in g), *(f"{c:.4f}" for c in s), f"{d:.4f}", "matched"])
        for i in report.missed:
            wr.writerow([i, "", *(f"{c:.4f}" for c in report.truth[i]), "", "", "", "", "missed"])
        for j in report.false_locations:
            wr.writerow(["", j, "", "", "", *(f"{c:.4f}" for c in report.salient[j].position), "", "false_location"])


def write_report(report: Report, sc: Scenario, out_dir, extra_manifest: Optional[dict] = None) -> dict:
    """Salient, error and grid CSVs, a JSON summary and the run manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_salient(out / "salient.csv", report.salient)
    write_errors(out / "errors.csv", report)
    write_grid(report.grid, out / "grid.csv")
    (out / "summary.json").write_text(json.dumps(report.summary(), indent=2, sort_keys=True) + "\n")
    (out / "scenario.toml").write_text(dumps_scenario(sc))
    manifest = {
        "tool": "skit",
        "version": __version__,
        "subcommand": "replay",
        "seed": sc.seed,
        "config_hash": config_hash(sc),
        "timings_s": {k: round(v, 6) for k, v in report.timings.items()},
    }
    manifest.update(extra_manifest or {})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
