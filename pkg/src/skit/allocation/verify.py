"""Independent re-check of a claimed assignment.

Works only from the raw problem description; it never looks at the built
program, so a bug in the row construction cannot hide a violation.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict

from .model import INTRA_SITE, AllocationProblem, Assignment

REL_TOL = 1e-9


def _leq(a: float, b: float) -> bool:
    return a <= b + REL_TOL * max(1.0, abs(b))


def verify_assignment(problem: AllocationProblem, a: Assignment) -> list[str]:
    """Return the sorted list of violated constraint tags; empty means pass."""
    bad = set()
    rate = problem.processing_frame_rate
    max_frame_time = min(problem.max_processing_time, problem.det_per_stream / rate)
    dets = {d.id: d for d in problem.detectors}
    machines = {m.id: m for m in problem.machines}
    bitrate_pos = {b: i for i, b in enumerate(problem.bitrates)}

    usable = {}
    for v, d, b in a.chosen:
        det = dets.get(d)
        if v not in problem.streams or det is None or b not in bitrate_pos:
            bad.add("detector_feasibility")
            continue
        if det.nominal_time > max_frame_time * (1 + 1e-12):
            bad.add("detector_feasibility")
        usable.setdefault((v, d), []).append(b)

    # one bitrate per (stream, detector): the window rows force it
    for key, rates in usable.items():
        if len(rates) > 1:
            bad.add("frame_timing")

    per_stream = Counter(v for v, _ in usable)
    for v in problem.streams:
        if per_stream[v] > problem.det_per_stream:
            bad.add("detPerStream")

    period = {d: math.ceil(round(dets[d].nominal_time * rate, 9)) or 1 for _, d in usable}

    F = a.horizon
    if F <= 0 or any(F % p for p in period.values()):
        bad.add("horizon")

    for v in problem.streams:
        frames = list(a.schedule.get(v, ()))
        if len(frames) != F:
            bad.add("horizon")
        if F <= 0:
            continue
        frames = (frames + [()] * F)[:F]
        for fr in frames:
            if len(fr) < 1:
                bad.add("detPerFrame_lower")
            if len(set(fr)) != len(fr) or len(fr) > problem.det_per_frame:
                bad.add("detPerFrame_upper")
        seen = {d for fr in frames for d in fr}
        for d in seen:
            if (v, d) not in usable:
                bad.add("frame_timing")
        for (vv, d), _ in usable.items():
            if vv != v:
                continue
            p = period[d]
            ind = [1 if d in fr else 0 for fr in frames]
            for k in range(F - p + 1):
                if sum(ind[k : k + p]) != 1:
                    bad.add("frame_timing")
                    break

    load = defaultdict(float)
    count = Counter()
    for (v, d), rates in usable.items():
        site = machines[dets[d].machine_id].site_id
        for b in rates:
            load[(v, site)] += b / period[d]
            count[(v, site)] += 1
    for (v, s), l in load.items():
        bw = problem.links.get((v, s), 0.0)
        if bw is INTRA_SITE:
            continue
        if not _leq(l, float(bw)):
            bad.add("bandwidth")

    ram = defaultdict(float)
    used_on = Counter()
    for (v, d), rates in usable.items():
        for _ in rates:
            ram[dets[d].machine_id] += dets[d].ram
            used_on[dets[d].machine_id] += 1
    for m, r in ram.items():
        if problem.exclusive_machines:
            if used_on[m] > 1:
                bad.add("exclusive_machines")
        elif not _leq(r, machines[m].ram):
            bad.add("ram")

    big_m = max(len(problem.sites), problem.det_per_stream)
    links = dict(a.links_used)
    for (v, s), n in links.items():
        if n < 0 or n > len(problem.sites) or n != int(n):
            bad.add("link_used")
    for key, n in count.items():
        if n > big_m * links.get(key, 0):
            bad.add("link_used")

    acc = 0.0
    for (v, d), rates in sorted(usable.items()):
        for b in rates:
            acc += b / period[d] * dets[d].accuracy[bitrate_pos[b]]
    obj = problem.w * acc - (1 - problem.w) * sum(links.values())
    if abs(obj - a.objective_value) > 1e-9 * max(1.0, abs(obj)):
        bad.add("objective")
    return sorted(bad)
