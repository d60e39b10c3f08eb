"""Scenario description: world, flight, synthetic detectors and pipeline knobs.

Scenario files are TOML. Angles are in degrees, distances in meters, pixel
quantities in detector-input pixels. See ``docs/scenario.md`` for the schema.
"""
from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import tomli_w
from scipy.spatial.transform import Rotation, Slerp

from ..fusion.camera import CameraModel, look_rotation, matrix_to_quaternion, quaternion_to_matrix
from ..fusion.sensor import DEFAULT_CLAMP, DEFAULT_MIN_PIXELS, PERSON, ObjectClassSpec, SensorModelParams
from ..fusion.terrain import Ridge, Terrain

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class WorldObject:
    x: float
    y: float
    class_id: str = "person"
    width: float = 0.5
    height: float = 1.7
    velocity: tuple = (0.0, 0.0)
    path: tuple = ()  # optional (t, x, y) keyframes; overrides x, y and velocity

    def xy(self, t: float) -> tuple[float, float]:
        if self.path:
            ts, xs, ys = zip(*self.path)
            return float(np.interp(t, ts, xs)), float(np.interp(t, ts, ys))
        return self.x + self.velocity[0] * t, self.y + self.velocity[1] * t


@dataclass(frozen=True)
class Trajectory:
    """Keyframed camera path.

    ``hold`` keeps each keyframe's orientation until the next keyframe
    (waypoint flight, constant heading per leg); ``slerp`` interpolates
    orientation (recorded pose tracks). Position is always linear.
    """

    times: tuple
    positions: tuple
    quaternions: tuple
    mode: str = "hold"

    def __post_init__(self):
        if len(self.times) == 0 or not (len(self.times) == len(self.positions) == len(self.quaternions)):
            raise ScenarioError("trajectory needs matching, non-empty times/positions/orientations")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ScenarioError("trajectory times must be non-decreasing")
        if self.mode not in ("hold", "slerp"):
            raise ScenarioError(f"unknown orientation mode {self.mode!r}")

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @classmethod
    def from_waypoints(cls, waypoints, speed: float, tilt_deg: float, yaw_deg: Optional[float] = None, duration: Optional[float] = None) -> "Trajectory":
        wps = [tuple(float(c) for c in w) for w in waypoints]
        if not wps:
            raise ScenarioError("no waypoints")
        if speed <= 0:
            raise ScenarioError("speed must be positive")
        if len(wps) == 1 and (yaw_deg is None or duration is None):
            raise ScenarioError("a single waypoint needs yaw_deg and duration")
        pitch = math.radians(tilt_deg)
        times = [0.0]
        for a, b in zip(wps, wps[1:]):
            times.append(times[-1] + math.dist(a, b) / speed)
        legs = [math.atan2(b[1] - a[1], b[0] - a[0]) for a, b in zip(wps, wps[1:])]
        if yaw_deg is not None:
            yaws = [math.radians(yaw_deg)] * len(wps)
        else:
            yaws = legs + legs[-1:]
        quats = [matrix_to_quaternion(look_rotation(y, pitch)) for y in yaws]
        if len(wps) == 1:
            wps, quats, times = wps * 2, quats * 2, [0.0, float(duration)]
        return cls(tuple(times), tuple(wps), tuple(quats), "hold")

    def pose(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Position and world-from-camera rotation at time ``t``."""
        t0, t1 = self.times[0], self.times[-1]
        if not t0 - 1e-9 <= t <= t1 + 1e-9:
            raise ScenarioError(f"t={t} outside trajectory [{t0}, {t1}]")
        t = min(max(t, t0), t1)
        times = np.asarray(self.times)
        k = int(np.searchsorted(times, t, side="right") - 1)
        k = min(k, len(times) - 1)
        P = np.asarray(self.positions, dtype=float)
        if k == len(times) - 1 or times[k + 1] == times[k]:
            return P[k].copy(), quaternion_to_matrix(self.quaternions[k])
        s = (t - times[k]) / (times[k + 1] - times[k])
        pos = P[k] + s * (P[k + 1] - P[k])
        if self.mode == "hold" or s == 0.0:
            return pos, quaternion_to_matrix(self.quaternions[k])
        # scipy uses scalar-last quaternions
        q = [self.quaternions[k], self.quaternions[k + 1]]
        rots = Rotation.from_quat([[w[1], w[2], w[3], w[0]] for w in q])
        R = Slerp([0.0, 1.0], rots)([s]).as_matrix()[0]
        return pos, R


@dataclass(frozen=True)
class SyntheticDetectorSpec:
    """Stand-in for a characterized network.

    ``tp_curve`` maps object pixel size (square root of box area) to
    true-positive probability, linearly between ``(size, rate)`` anchors.
    Scores are normal draws clipped to [0, 1]; draws under ``score_cutoff``
    are dropped, as the characterized networks report nothing below it.
    """

    id: str
    accuracy: float = 0.6
    tp_curve: tuple = ((8.0, 0.0), (32.0, 0.6), (96.0, 0.95))
    fp_rate: float = 0.0
    center_noise_px: float = 0.0
    scale_noise: float = 0.0
    tp_score: tuple = (0.8, 0.1)
    fp_score: tuple = (0.4, 0.1)
    score_cutoff: float = 0.3
    p_det_rel: Optional[float] = None
    class_id: str = "person"

    def __post_init__(self):
        object.__setattr__(self, "tp_curve", tuple(tuple(float(c) for c in p) for p in self.tp_curve))
        object.__setattr__(self, "tp_score", tuple(float(c) for c in self.tp_score))
        object.__setattr__(self, "fp_score", tuple(float(c) for c in self.fp_score))
        sizes = [s for s, _ in self.tp_curve]
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ScenarioError(f"{self.id}: tp_curve sizes must increase")
        if any(not 0.0 <= r <= 1.0 for _, r in self.tp_curve):
            raise ScenarioError(f"{self.id}: tp rates must lie in [0, 1]")
        if self.fp_rate < 0 or self.center_noise_px < 0 or self.scale_noise < 0:
            raise ScenarioError(f"{self.id}: rates and noise must be non-negative")
        if self.tp_score[1] < 0 or self.fp_score[1] < 0:
            raise ScenarioError(f"{self.id}: score spread must be non-negative")
        if self.p_det_rel is not None and not 0.0 <= self.p_det_rel <= 1.0:
            raise ScenarioError(f"{self.id}: p_det_rel outside [0, 1]")

    def tp_rate(self, size_px):
        xs, ys = zip(*self.tp_curve)
        return np.interp(size_px, xs, ys)


@dataclass(frozen=True)
class PipelineConfig:
    grid_res: float = 0.5
    clamp: float = DEFAULT_CLAMP
    p_positive_max: float = 0.3
    p_negative_max: float = 0.05
    min_pixels: float = DEFAULT_MIN_PIXELS
    threshold: float = 0.75
    link_dist: float = 2.0
    match_radius: float = 3.0
    pose_noise_pos: float = 0.0
    pose_noise_ang_deg: float = 0.0
    p_det_rel: Optional[float] = None

    def __post_init__(self):
        if self.grid_res <= 0:
            raise ScenarioError("grid_res must be positive")
        if not 0.5 < self.threshold < 1.0:
            raise ScenarioError("threshold must lie in (0.5, 1)")
        if self.pose_noise_pos < 0 or self.pose_noise_ang_deg < 0:
            raise ScenarioError("pose noise must be non-negative")

    def sensor_params(self, p_det_rel: float) -> SensorModelParams:
        return SensorModelParams(p_det_rel, self.p_positive_max, self.p_negative_max, self.clamp, self.min_pixels)


@dataclass(frozen=True)
class CameraSpec:
    fx: float = 900.0
    fy: float = 900.0
    calib: tuple = (1280, 720)
    input: tuple = (1280, 720)

    def at(self, position, R) -> CameraModel:
        return CameraModel(self.fx, self.fy, self.calib[0], self.calib[1], self.input[0], self.input[1], position, R)


@dataclass(frozen=True)
class Scenario:
    name: str
    terrain: Terrain
    objects: tuple
    trajectory: Trajectory
    detectors: tuple
    frame_rate: float
    seed: int = 0
    camera: CameraSpec = field(default_factory=CameraSpec)
    classes: tuple = (PERSON,)
    schedule: Optional[dict] = None
    schedule_horizon: int = 1
    max_accuracy: Optional[float] = None
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        if self.frame_rate <= 0:
            raise ScenarioError("frame_rate must be positive")
        ids = [d.id for d in self.detectors]
        if len(set(ids)) != len(ids):
            raise ScenarioError("duplicate detector ids")
        for o in self.objects:
            if not self.terrain.contains(o.x, o.y):
                raise ScenarioError(f"object at ({o.x}, {o.y}) outside the terrain")
            if o.class_id not in {c.class_id for c in self.classes}:
                raise ScenarioError(f"unknown object class {o.class_id!r}")
        for p in self.trajectory.positions:
            if not self.terrain.contains(p[0], p[1]):
                raise ScenarioError(f"trajectory point {p} outside the terrain")
        if self.schedule is not None:
            unknown = set(self.schedule) - set(ids)
            if unknown:
                raise ScenarioError(f"schedule names unknown detectors {sorted(unknown)}")

    @property
    def n_frames(self) -> int:
        return int(math.floor(self.trajectory.duration * self.frame_rate + 1e-9)) + 1

    def frame_time(self, k: int) -> float:
        return self.trajectory.times[0] + k / self.frame_rate

    def class_spec(self, class_id: str) -> ObjectClassSpec:
        for c in self.classes:
            if c.class_id == class_id:
                return c
        raise ScenarioError(f"unknown class {class_id!r}")

    def active(self, det_id: str, frame: int) -> bool:
        if self.schedule is None:
            return True
        return frame % self.schedule_horizon in self.schedule.get(det_id, ())

    def p_det_rel(self, det: SyntheticDetectorSpec) -> float:
        if self.pipeline.p_det_rel is not None:
            return self.pipeline.p_det_rel
        if det.p_det_rel is not None:
            return det.p_det_rel
        top = self.max_accuracy or max(d.accuracy for d in self.detectors)
        return det.accuracy / top if top > 0 else 0.0

    def replace(self, **kw) -> "Scenario":
        return dataclasses.replace(self, **kw)


# ---------------------------------------------------------------- overrides

_DET_KEYS = {f.name for f in dataclasses.fields(SyntheticDetectorSpec)} - {"id", "tp_curve", "tp_score", "fp_score"}
_PIPE_KEYS = {f.name for f in dataclasses.fields(PipelineConfig)}


def _coerce(value: str):
    try:
        return tomllib.loads(f"v = {value}")["v"]
    except tomllib.TOMLDecodeError:
        return value


def apply_overrides(sc: Scenario, overrides) -> Scenario:
    """Apply ``key=value`` strings (or a mapping) to the pipeline, the scenario or every detector.

    ``p_det_rel`` sets the relative fidelity of every detector.
    """
    items = overrides.items() if isinstance(overrides, dict) else [o.split("=", 1) for o in overrides]
    for item in items:
        if len(item) != 2:
            raise ScenarioError(f"override {item!r} is not key=value")
        key, raw = item
        key = key.strip()
        val = _coerce(raw.strip()) if isinstance(raw, str) else raw
        if key in _PIPE_KEYS:
            sc = sc.replace(pipeline=dataclasses.replace(sc.pipeline, **{key: val}))
        elif key in ("seed", "frame_rate", "name"):
            sc = sc.replace(**{key: val})
        elif key in _DET_KEYS:
            sc = sc.replace(detectors=tuple(dataclasses.replace(d, **{key: val}) for d in sc.detectors))
        else:
            raise ScenarioError(f"unknown override {key!r}")
    return sc


# --------------------------------------------------------------------- TOML


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        t = doc["terrain"]
        ridges = tuple(Ridge(r["x0"], r["y0"], math.radians(r["heading_deg"]), r["height"], r["sigma"]) for r in t.get("ridges", []))
        terrain = Terrain(t["x_min"], t["x_max"], t["y_min"], t["y_max"], t.get("base", 0.0), ridges)
        objects = tuple(
            WorldObject(
                o["x"],
                o["y"],
                o.get("class", "person"),
                o.get("width", 0.5),
                o.get("height", 1.7),
                tuple(o.get("velocity", (0.0, 0.0))),
                tuple(tuple(k) for k in o.get("path", ())),
            )
            for o in doc.get("objects", [])
        )
        tr = doc["trajectory"]
        if "poses" in tr:
            poses = tr["poses"]
            traj = Trajectory(
                tuple(float(p["t"]) for p in poses),
                tuple(tuple(float(c) for c in p["position"]) for p in poses),
                tuple(tuple(float(c) for c in p["quaternion"]) for p in poses),
                tr.get("orientation", "slerp"),
            )
        else:
            traj = Trajectory.from_waypoints(tr["waypoints"], tr.get("speed", 1.0), tr["tilt_deg"], tr.get("yaw_deg"), tr.get("duration"))
        dets = tuple(SyntheticDetectorSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}) for d in doc.get("detectors", []))
        cam = CameraSpec(**{k: tuple(v) if isinstance(v, list) else v for k, v in doc.get("camera", {}).items()})
        classes = tuple(
            ObjectClassSpec(cid, c["obj_w_min"], c["obj_w_max"], c["obj_h_min"], c["obj_h_max"], c.get("significant_point", "bottom_center"), c.get("tukey_alpha", 0.5))
            for cid, c in doc.get("classes", {}).items()
        ) or (PERSON,)
        sched = doc.get("schedule")
        schedule = None
        horizon = 1
        if sched is not None:
            horizon = int(sched["horizon"])
            schedule = {k: tuple(int(f) for f in v) for k, v in sched["frames"].items()}
        pipe = PipelineConfig(**doc.get("pipeline", {}))
        return Scenario(
            name=doc.get("name", "scenario"),
            terrain=terrain,
            objects=objects,
            trajectory=traj,
            detectors=dets,
            frame_rate=float(doc["frame_rate"]),
            seed=int(doc.get("seed", 0)),
            camera=cam,
            classes=classes,
            schedule=schedule,
            schedule_horizon=horizon,
            max_accuracy=doc.get("max_accuracy"),
            pipeline=pipe,
        )
    except KeyError as exc:
        raise ScenarioError(f"missing field {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ScenarioError(str(exc)) from None


def _strip_none(d: dict) -> dict:
    return {k: v for k, v in d.items() if v is not None}


def _object_dict(o: WorldObject) -> dict:
    d = {"x": o.x, "y": o.y, "class": o.class_id, "width": o.width, "height": o.height, "velocity": list(o.velocity)}
    if o.path:
        d["path"] = [list(k) for k in o.path]
    return d


def scenario_to_dict(sc: Scenario) -> dict:
    t = sc.terrain
    doc = {
        "name": sc.name,
        "seed": sc.seed,
        "frame_rate": sc.frame_rate,
        "terrain": {
            "x_min": t.x_min,
            "x_max": t.x_max,
            "y_min": t.y_min,
            "y_max": t.y_max,
            "base": t.base,
            "ridges": [{"x0": r.x0, "y0": r.y0, "heading_deg": math.degrees(r.heading), "height": r.height, "sigma": r.sigma} for r in t.ridges],
        },
        "camera": {"fx": sc.camera.fx, "fy": sc.camera.fy, "calib": list(sc.camera.calib), "input": list(sc.camera.input)},
        "trajectory": {
            "orientation": sc.trajectory.mode,
            "poses": [
                {"t": float(tt), "position": list(p), "quaternion": list(q)}
                for tt, p, q in zip(sc.trajectory.times, sc.trajectory.positions, sc.trajectory.quaternions)
            ],
        },
        "classes": {
            c.class_id: {
                "obj_w_min": c.obj_w_min,
                "obj_w_max": c.obj_w_max,
                "obj_h_min": c.obj_h_min,
                "obj_h_max": c.obj_h_max,
                "significant_point": c.significant_point,
                "tukey_alpha": c.tukey_alpha,
            }
            for c in sc.classes
        },
        "objects": [
            _object_dict(o) for o in sc.objects
        ],
        "detectors": [
            _strip_none({k: [list(p) for p in v] if k == "tp_curve" else list(v) if isinstance(v, tuple) else v for k, v in dataclasses.asdict(d).items()})
            for d in sc.detectors
        ],
        "pipeline": _strip_none(dataclasses.asdict(sc.pipeline)),
    }
    if sc.max_accuracy is not None:
        doc["max_accuracy"] = sc.max_accuracy
    if sc.schedule is not None:
        doc["schedule"] = {"horizon": sc.schedule_horizon, "frames": {k: list(v) for k, v in sc.schedule.items()}}
    return doc


def read_scenario(path) -> Scenario:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    return scenario_from_dict(doc)


def dumps_scenario(sc: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(sc))


def write_scenario(sc: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(sc))
