"""Bundled problem instances built from the measured execution-time table."""
from __future__ import annotations

import csv
import math
from importlib import resources

from .model import INTRA_SITE, AllocationProblem, DetectorProfile, Machine

B6 = (50.0, 75.0, 100.0, 250.0, 500.0, 1000.0)
B20 = B6 + (2500.0, 5000.0, 20000.0)
SYSTEMS = ("A", "B", "C", "D")


def _rows(name: str) -> list[dict]:
    text = resources.files("skit.data").joinpath(name).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def execution_times() -> dict:
    """``{network: {"lp": bool, ("cpu"|"gpu", system): ms}}``; missing GPUs are absent."""
    out = {}
    for r in _rows("execution_times.csv"):
        entry = {"lp": r["low_proposal"] == "1"}
        for key, val in r.items():
            if key.startswith(("cpu_", "gpu_")) and val:
                unit, system = key.split("_")
                entry[(unit, system)] = float(val)
        out[r["network"]] = entry
    return out


def detector_quality() -> dict:
    return {r["network"]: (float(r["accuracy"]), float(r["ram_mb"])) for r in _rows("detector_quality.csv")}


def bitrate_factor(kbps: float) -> float:
    # accuracy drops at low bitrates, saturating around a few Mbps
    return 1.0 - 0.6 * math.exp(-kbps / 400.0)


def machine_detectors(machine_id: str, system: str, bitrates, include_lp: bool = True) -> list[DetectorProfile]:
    """Every network on one machine, as a CPU and (when present) a GPU detector."""
    quality = detector_quality()
    out = []
    for net, entry in execution_times().items():
        if entry["lp"] and not include_lp:
            continue
        acc, ram = quality[net]
        accuracy = tuple(round(acc * bitrate_factor(b), 6) for b in bitrates)
        for unit in ("cpu", "gpu"):
            t = entry.get((unit, system))
            if t is None:
                continue
            out.append(DetectorProfile(f"{machine_id}/{net}/{unit}", machine_id, t / 1000.0, accuracy, ram, net))
    return out


def table7_problem(
    n_streams: int,
    dps: int,
    bitrates=B20,
    link_kbps: float = 20000.0,
    rate: float = 30.0,
    dpf: int = 2,
    w: float = 0.6,
    per_type: int = 10,
) -> AllocationProblem:
    """The sizing benchmark: 4 sites, ``per_type`` machines of each system.

    Each machine is one entry holding its CPU and GPU detectors; low-proposal
    networks are left out.
    """
    machines, detectors = [], []
    for system in SYSTEMS:
        for k in range(per_type):
            mid = f"{system}{k}"
            machines.append(Machine(mid, system, 64000.0, "cpu" if system == "A" else "cpu+gpu"))
            detectors.extend(machine_detectors(mid, system, bitrates, include_lp=False))
    streams = tuple(f"v{i}" for i in range(n_streams))
    links = {(v, s): link_kbps for v in streams for s in SYSTEMS}
    return AllocationProblem(
        streams=streams,
        sites=SYSTEMS,
        machines=machines,
        detectors=detectors,
        bitrates=bitrates,
        links=links,
        processing_frame_rate=rate,
        max_processing_time=10.0,
        det_per_stream=dps,
        det_per_frame=dpf,
        w=w,
    )


def figure_problem(det_per_frame: int) -> AllocationProblem:
    """One stream, one on-site machine and four detectors of periods 2, 2, 4 and 3."""
    periods = (2, 2, 4, 3)
    accs = (0.9, 0.8, 0.95, 0.6)
    dets = [
        DetectorProfile(f"d{i}", "m0", float(p), (a,), 1000.0, f"net{i}") for i, (p, a) in enumerate(zip(periods, accs))
    ]
    return AllocationProblem(
        streams=("v0",),
        sites=("s0",),
        machines=(Machine("m0", "s0", 16000.0, "gpu"),),
        detectors=dets,
        bitrates=(1000.0,),
        links={("v0", "s0"): INTRA_SITE},
        processing_frame_rate=1.0,
        max_processing_time=10.0,
        det_per_stream=4,
        det_per_frame=det_per_frame,
        w=0.9,
    )


EXP5_BITRATES = (1000.0, 5000.0, 20000.0)


def exp5_problem(case: int) -> AllocationProblem:
    """Three resource configurations for the allocation-to-map experiment.

    1: on-board CPU of system A at 5 Hz. 2: one remote system-D machine at
    10 Hz. 3: two remote system-D sites at 10 Hz.
    """
    if case == 1:
        sites = ("onboard",)
        machines = (Machine("A0", "onboard", 16000.0, "cpu"),)
        dets = machine_detectors("A0", "A", EXP5_BITRATES)
        links = {("uav", "onboard"): INTRA_SITE}
        rate, dps, max_t = 5.0, 1, 1.0
    elif case in (2, 3):
        sites = ("D1",) if case == 2 else ("D1", "D2")
        machines = tuple(Machine(s, s, 16000.0, "cpu+gpu") for s in sites)
        dets = [d for s in sites for d in machine_detectors(s, "D", EXP5_BITRATES)]
        links = {("uav", s): 20000.0 for s in sites}
        rate, dps = 10.0, 2
        max_t = 0.065 if case == 2 else 0.2
    else:
        raise ValueError("case must be 1, 2 or 3")
    return AllocationProblem(
        streams=("uav",),
        sites=sites,
        machines=machines,
        detectors=dets,
        bitrates=EXP5_BITRATES,
        links=links,
        processing_frame_rate=rate,
        max_processing_time=max_t,
        det_per_stream=dps,
        det_per_frame=1,
        w=0.6,
        exclusive_machines=case != 1,
    )
