"""Problem and assignment files (TOML) and the CSV schedule export."""
from __future__ import annotations

import csv
import io
import sys
from pathlib import Path
from typing import Union

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import INTRA_SITE, AllocationProblem, Assignment, DetectorProfile, Machine, ProblemError, Status

PathLike = Union[str, Path]
ACCURACY_METRICS = ("olrp", "ar", "direct")


def _accuracy(entry: dict, metric: str, n_levels: int) -> tuple:
    if metric == "olrp" and "olrp" in entry:
        vals = [1.0 - float(x) for x in entry["olrp"]]
    elif metric == "ar" and "ar" in entry:
        vals = [float(x) for x in entry["ar"]]
    elif "accuracy" in entry:
        vals = [float(x) for x in entry["accuracy"]]
    else:
        raise ProblemError(f"detector {entry.get('id')}: no {metric!r} values and no 'accuracy' list")
    if len(vals) == 1 and n_levels > 1:
        vals = vals * n_levels
    return tuple(vals)


def problem_from_dict(doc: dict, overrides: dict | None = None) -> AllocationProblem:
    params = dict(doc.get("params", {}))
    params.update(overrides or {})
    bitrates = tuple(float(b) for b in params["bitrates_kbps"])
    metric = params.get("accuracy_metric", "olrp")
    if metric not in ACCURACY_METRICS:
        raise ProblemError(f"accuracy_metric must be one of {ACCURACY_METRICS}")
    streams = tuple(s["id"] for s in doc.get("streams", []))
    sites = tuple(s["id"] for s in doc.get("sites", []))
    machines = tuple(
        Machine(m["id"], m["site"], float(m["ram_mb"]), m.get("kind", "cpu")) for m in doc.get("machines", [])
    )
    detectors = tuple(
        DetectorProfile(
            d["id"],
            d["machine"],
            float(d["time_ms"]) / 1000.0,
            _accuracy(d, metric, len(bitrates)),
            float(d["ram_mb"]),
            d.get("network", ""),
        )
        for d in doc.get("detectors", [])
    )
    links = {}
    for link in doc.get("links", []):
        bw = link["bandwidth_kbps"]
        links[(link["stream"], link["site"])] = INTRA_SITE if bw == "intra" else float(bw)
    return AllocationProblem(
        streams=streams,
        sites=sites,
        machines=machines,
        detectors=detectors,
        bitrates=bitrates,
        links=links,
        processing_frame_rate=float(params.get("processing_frame_rate", 30.0)),
        max_processing_time=float(params.get("max_processing_time_ms", 1000.0)) / 1000.0,
        det_per_stream=int(params.get("det_per_stream", 1)),
        det_per_frame=int(params.get("det_per_frame", 1)),
        w=float(params.get("w", 0.5)),
        exclusive_machines=bool(params.get("exclusive_machines", False)),
    )


def read_problem(path: PathLike, overrides: dict | None = None) -> AllocationProblem:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ProblemError(f"{path}: {exc}") from None
    try:
        return problem_from_dict(doc, overrides)
    except KeyError as exc:
        raise ProblemError(f"{path}: missing key {exc}") from None


def problem_to_dict(p: AllocationProblem) -> dict:
    return {
        "params": {
            "processing_frame_rate": p.processing_frame_rate,
            "max_processing_time_ms": p.max_processing_time * 1000.0,
            "det_per_stream": p.det_per_stream,
            "det_per_frame": p.det_per_frame,
            "w": p.w,
            "exclusive_machines": p.exclusive_machines,
            "bitrates_kbps": list(p.bitrates),
            "accuracy_metric": "direct",
        },
        "streams": [{"id": s} for s in p.streams],
        "sites": [{"id": s} for s in p.sites],
        "machines": [{"id": m.id, "site": m.site_id, "ram_mb": m.ram, "kind": m.kind} for m in p.machines],
        "detectors": [
            {
                "id": d.id,
                "machine": d.machine_id,
                "network": d.network,
                "time_ms": d.nominal_time * 1000.0,
                "ram_mb": d.ram,
                "accuracy": list(d.accuracy),
            }
            for d in p.detectors
        ],
        "links": [
            {"stream": v, "site": s, "bandwidth_kbps": "intra" if bw is INTRA_SITE else bw}
            for (v, s), bw in p.links.items()
        ],
    }


def write_problem(p: AllocationProblem, path: PathLike) -> None:
    Path(path).write_text(tomli_w.dumps(problem_to_dict(p)))


def assignment_to_dict(a: Assignment) -> dict:
    return {
        "status": a.status.value,
        "objective": a.objective_value,
        "horizon": a.horizon,
        "chosen": [{"stream": v, "detector": d, "bitrate_kbps": b} for v, d, b in a.chosen],
        "links_used": [{"stream": v, "site": s, "count": n} for (v, s), n in sorted(a.links_used.items())],
        "schedule": {v: [list(fr) for fr in frames] for v, frames in a.schedule.items()},
    }


def dumps_assignment(a: Assignment) -> str:
    return tomli_w.dumps(assignment_to_dict(a))


def write_assignment(a: Assignment, path: PathLike) -> None:
    Path(path).write_text(dumps_assignment(a))


def read_assignment(path: PathLike) -> Assignment:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return Assignment(
        chosen=tuple((c["stream"], c["detector"], float(c["bitrate_kbps"])) for c in doc.get("chosen", [])),
        schedule={v: tuple(tuple(fr) for fr in frames) for v, frames in doc.get("schedule", {}).items()},
        links_used={(l["stream"], l["site"]): int(l["count"]) for l in doc.get("links_used", [])},
        objective_value=float(doc.get("objective", 0.0)),
        horizon=int(doc.get("horizon", 0)),
        status=Status(doc.get("status", "optimal")),
    )


def schedule_csv(problem: AllocationProblem, a: Assignment) -> str:
    """One row per (stream, frame, detector), ready for a Gantt-style plot."""
    dets = {d.id: d for d in problem.detectors}
    rate = {(v, d): b for v, d, b in a.chosen}
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["stream", "frame", "detector", "machine", "site", "bitrate_kbps", "period"])
    for v, frames in a.schedule.items():
        for f, fr in enumerate(frames):
            for d in fr:
                det = dets[d]
                wr.writerow(
                    [v, f, d, det.machine_id, problem.machine(det.machine_id).site_id, rate.get((v, d), ""), problem.period(det)]
                )
    return buf.getvalue()
