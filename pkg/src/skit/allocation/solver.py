"""Exact solvers for the allocation program and the end-to-end driver."""
from __future__ import annotations

import math
import time
from functools import lru_cache
from typing import Optional

import numpy as np

from .ilp import IlpInstance, build_ilp
from .model import (
    AllocationProblem,
    Assignment,
    Status,
    get_detectors,
    get_lcm,
)

TIE_TOL = 1e-9


@lru_cache(maxsize=4096)
def frame_offsets(periods: tuple, horizon: int, det_per_frame: int) -> Optional[tuple]:
    """Start frames that give every frame between 1 and ``det_per_frame`` detectors.

    A detector of period p that satisfies the sliding-window rows runs on
    exactly the frames ``phase, phase + p, ...``, so a schedule is a choice of
    one phase per detector. The first phase is pinned to 0 (rotating a cyclic
    schedule keeps it valid). Returns the lexicographically smallest phase
    vector or ``None`` when no schedule exists.
    """
    n = len(periods)
    if n == 0:
        return None
    if sum(horizon // p for p in periods) < horizon:
        return None
    if sum(horizon // p for p in periods) > det_per_frame * horizon:
        return None
    counts = np.zeros(horizon, dtype=np.int64)
    phases = [0] * n
    # frames each remaining detector can still cover, for the coverage prune
    tail = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        tail[i] = tail[i + 1] + horizon // periods[i]

    def place(i: int) -> bool:
        if i == n:
            return bool(np.all(counts >= 1))
        p = periods[i]
        for phase in range(p if i > 0 else 1):
            sl = slice(phase, horizon, p)
            if np.any(counts[sl] >= det_per_frame):
                continue
            counts[sl] += 1
            if int(np.count_nonzero(counts == 0)) <= tail[i + 1] and place(i + 1):
                phases[i] = phase
                return True
            counts[sl] -= 1
        return False

    return tuple(phases) if place(0) else None


class _Search:
    """Depth-first branch and bound over (stream, detector) slots.

    Each slot takes no bitrate or exactly one. The bound on what the
    undecided slots can still add is the smaller of a count-limited bound
    (best ``det_per_stream`` remaining values) and a fractional knapsack on
    frame capacity (``sum(1/period) <= det_per_frame``). Link penalties of
    undecided slots are ignored, which keeps the bound valid.
    """

    def __init__(self, inst: IlpInstance, time_budget: Optional[float]):
        self.inst = inst
        p = inst.problem
        self.p = p
        self.nV, self.nD, self.nB = len(p.streams), len(inst.detectors), len(p.bitrates)
        self.F = inst.horizon
        self.periods = inst.periods
        self.frames = [self.F // q for q in self.periods]  # frames covered per detector
        site_index = {s: i for i, s in enumerate(p.sites)}
        machine_index = {m.id: i for i, m in enumerate(p.machines)}
        self.det_site = [site_index[p.site_of(d)] for d in inst.detectors]
        self.det_machine = [machine_index[d.machine_id] for d in inst.detectors]
        self.ram = [float(d.ram) for d in inst.detectors]
        self.machine_ram = [float(m.ram) for m in p.machines]
        self.w = p.w
        self.bw = []
        for v in p.streams:
            row = []
            for s in p.sites:
                bw = p.link_bw(v, s)
                row.append(math.inf if not isinstance(bw, (int, float)) else float(bw))
            self.bw.append(row)
        # per slot: list of (value, bitrate index, load) for the admissible bitrates
        self.options = []
        for v in range(self.nV):
            for d in range(self.nD):
                opts = []
                for b in range(self.nB):
                    load = p.bitrates[b] / self.periods[d]
                    if load > self.bw[v][self.det_site[d]] * (1 + 1e-12):
                        continue
                    opts.append((float(inst.objective[inst.x(v, d, b)]), b, load))
                opts.sort(key=lambda t: (-t[0], t[1]))
                self.options.append(opts)
        self.best_value = [max((o[0] for o in opts), default=None) for opts in self.options]
        self.deadline = None if time_budget is None else time.perf_counter() + time_budget
        self.timed_out = False
        self.nodes = 0
        self.best = None  # (objective, key, chosen, phases)
        # bound contribution of untouched streams, computed once
        self.stream_bound = [self._slot_bound(v, 0, 0, 0) for v in range(self.nV)]
        self.suffix_bound = [0.0] * (self.nV + 1)
        for v in range(self.nV - 1, -1, -1):
            self.suffix_bound[v] = self.suffix_bound[v + 1] + self.stream_bound[v]

    # ------------------------------------------------------------- bounds
    def _slot_bound(self, v: int, d0: int, used: int, frames_used: int) -> float:
        items = []
        for d in range(d0, self.nD):
            val = self.best_value[v * self.nD + d]
            if val is not None and val > 0:
                items.append((val, self.frames[d]))
        if not items:
            return 0.0
        k = self.p.det_per_stream - used
        by_value = sorted((it[0] for it in items), reverse=True)
        count_bound = sum(by_value[: max(k, 0)])
        cap = self.p.det_per_frame * self.F - frames_used
        frac_bound = 0.0
        for val, fr in sorted(items, key=lambda it: -it[0] / it[1]):
            if cap <= 0:
                break
            take = min(1.0, cap / fr)
            frac_bound += val * take
            cap -= fr * take
        return min(count_bound, frac_bound)

    def _coverage_possible(self, v: int, d0: int, used: int, frames_used: int) -> bool:
        fr = sorted(
            (self.frames[d] for d in range(d0, self.nD) if self.options[v * self.nD + d]),
            reverse=True,
        )
        k = self.p.det_per_stream - used
        return frames_used + sum(fr[: max(k, 0)]) >= self.F

    # ------------------------------------------------------------- search
    def run(self):
        nV = self.nV
        state = dict(
            chosen=[],
            value=0.0,
            links=set(),
            ram=[0.0] * len(self.machine_ram),
            mcount=[0] * len(self.machine_ram),
            phases={},
        )
        self._stream(0, state)
        return self.best

    def _check_time(self):
        self.nodes += 1
        if self.deadline is not None and (self.nodes & 63) == 1 and time.perf_counter() > self.deadline:
            self.timed_out = True
        return self.timed_out

    def _stream(self, v: int, st):
        if v == self.nV:
            self._leaf(st)
            return
        self._slot(v, 0, 0, 0, [0.0] * len(self.p.sites), st)

    def _slot(self, v, d, used, frames_used, site_load, st):
        if self._check_time():
            return
        upper = (
            st["value"]
            - (1 - self.w) * len(st["links"])
            + self._slot_bound(v, d, used, frames_used)
            + self.suffix_bound[v + 1]
        )
        if self.best is not None and upper < self.best[0] - TIE_TOL:
            return
        if not self._coverage_possible(v, d, used, frames_used):
            return
        if d == self.nD or used == self.p.det_per_stream:
            periods = tuple(self.periods[dd] for vv, dd, _ in st["chosen"] if vv == v)
            phases = frame_offsets(periods, self.F, self.p.det_per_frame)
            if phases is None:
                return
            st["phases"][v] = phases
            self._stream(v + 1, st)
            del st["phases"][v]
            return
        slot = v * self.nD + d
        m = self.det_machine[d]
        s = self.det_site[d]
        if self.frames[d] + frames_used <= self.p.det_per_frame * self.F:
            for val, b, load in self.options[slot]:
                if site_load[s] + load > self.bw[v][s] * (1 + 1e-12):
                    continue
                if self.p.exclusive_machines:
                    if st["mcount"][m] >= 1:
                        continue
                elif st["ram"][m] + self.ram[d] > self.machine_ram[m] * (1 + 1e-12):
                    continue
                st["chosen"].append((v, d, b))
                st["value"] += val
                st["ram"][m] += self.ram[d]
                st["mcount"][m] += 1
                site_load[s] += load
                new_link = (v, s) not in st["links"]
                if new_link:
                    st["links"].add((v, s))
                self._slot(v, d + 1, used + 1, frames_used + self.frames[d], site_load, st)
                if new_link:
                    st["links"].discard((v, s))
                site_load[s] -= load
                st["mcount"][m] -= 1
                st["ram"][m] -= self.ram[d]
                st["value"] -= val
                st["chosen"].pop()
        self._slot(v, d + 1, used, frames_used, site_load, st)

    def _leaf(self, st):
        chosen = sorted(st["chosen"])
        obj = objective_of(self.inst, chosen)
        key = tuple(chosen)
        if (
            self.best is None
            or obj > self.best[0] + TIE_TOL
            or (abs(obj - self.best[0]) <= TIE_TOL and key < self.best[1])
        ):
            self.best = (obj, key, chosen, dict(st["phases"]))


def objective_of(inst: IlpInstance, chosen) -> float:
    """Objective of a set of ``(v, d, b)`` index triples with minimal link counts."""
    p = inst.problem
    total = 0.0
    for v, d, b in sorted(chosen):
        total += p.w * p.bitrates[b] / inst.periods[d] * inst.detectors[d].accuracy[b]
    pairs = {(v, p.site_of(inst.detectors[d])) for v, d, _ in chosen}
    return total - (1.0 - p.w) * len(pairs)


def _to_assignment(inst: IlpInstance, chosen, phases, status: Status) -> Assignment:
    p = inst.problem
    F = inst.horizon
    schedule = {}
    for v, stream in enumerate(p.streams):
        frames = [[] for _ in range(F)]
        dets = sorted(d for vv, d, _ in chosen if vv == v)
        for d, phase in zip(dets, phases.get(v, ())):
            for f in range(phase, F, inst.periods[d]):
                frames[f].append(inst.detectors[d].id)
        schedule[stream] = tuple(tuple(fr) for fr in frames)
    links = {}
    for v, d, _ in chosen:
        key = (p.streams[v], p.site_of(inst.detectors[d]))
        links[key] = 1
    triples = tuple((p.streams[v], inst.detectors[d].id, p.bitrates[b]) for v, d, b in sorted(chosen))
    return Assignment(
        chosen=triples,
        schedule=schedule,
        links_used=links,
        objective_value=objective_of(inst, chosen),
        horizon=F,
        status=status,
    )


def solve_bnb(inst: IlpInstance, time_budget: Optional[float] = None) -> Assignment:
    search = _Search(inst, time_budget)
    best = search.run()
    if best is None:
        status = Status.TIMEOUT if search.timed_out else Status.INFEASIBLE
        return Assignment(horizon=inst.horizon, status=status)
    status = Status.TIMEOUT if search.timed_out else Status.OPTIMAL
    return _to_assignment(inst, best[2], best[3], status)


def assignment_from_vector(inst: IlpInstance, sol: np.ndarray, status: Status = Status.OPTIMAL) -> Assignment:
    """Turn a raw variable vector (for example from an external solver) into an assignment."""
    p = inst.problem
    nV, nD, nB = len(p.streams), len(inst.detectors), len(p.bitrates)
    chosen = [(v, d, b) for v in range(nV) for d in range(nD) for b in range(nB) if sol[inst.x(v, d, b)] > 0.5]
    schedule = {}
    for v, stream in enumerate(p.streams):
        schedule[stream] = tuple(
            tuple(inst.detectors[d].id for d in range(nD) if sol[inst.y(v, d, f)] > 0.5) for f in range(inst.horizon)
        )
    links = {}
    for v in range(nV):
        for s in range(len(p.sites)):
            n = int(round(sol[inst.link(v, s)]))
            if n:
                links[(p.streams[v], p.sites[s])] = n
    acc = sum(p.w * p.bitrates[b] / inst.periods[d] * inst.detectors[d].accuracy[b] for v, d, b in sorted(chosen))
    triples = tuple((p.streams[v], inst.detectors[d].id, p.bitrates[b]) for v, d, b in sorted(chosen))
    return Assignment(
        chosen=triples,
        schedule=schedule,
        links_used=links,
        objective_value=acc - (1 - p.w) * sum(links.values()),
        horizon=inst.horizon,
        status=status,
    )


def solve_highs(inst: IlpInstance, time_budget: Optional[float] = None) -> Assignment:
    """Solve with HiGHS through scipy. The special ordered sets become plain rows."""
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import coo_matrix

    rows, cols, vals, lo, hi = [], [], [], [], []
    r = 0
    for row in inst.rows:
        if not math.isfinite(row.lo) and not math.isfinite(row.hi):
            continue
        for i, c in row.coeffs.items():
            rows.append(r)
            cols.append(i)
            vals.append(c)
        lo.append(row.lo)
        hi.append(row.hi)
        r += 1
    for group in inst.sos1:
        for i in group:
            rows.append(r)
            cols.append(i)
            vals.append(1.0)
        lo.append(-np.inf)
        hi.append(1.0)
        r += 1
    A = coo_matrix((vals, (rows, cols)), shape=(r, inst.n_vars)).tocsr()
    options = {"disp": False}
    if time_budget is not None:
        options["time_limit"] = float(time_budget)
    res = milp(
        -inst.objective,
        constraints=LinearConstraint(A, lo, hi),
        integrality=np.ones(inst.n_vars),
        bounds=Bounds(np.zeros(inst.n_vars), np.asarray(inst.upper, dtype=float)),
        options=options,
    )
    if res.status == 2:
        return Assignment(horizon=inst.horizon, status=Status.INFEASIBLE)
    if res.x is None:
        return Assignment(horizon=inst.horizon, status=Status.TIMEOUT)
    status = Status.OPTIMAL if res.status == 0 else Status.TIMEOUT
    return assignment_from_vector(inst, np.round(res.x), status)


BACKENDS = {"bnb": solve_bnb, "highs": solve_highs}


def solve_ilp(inst: IlpInstance, time_budget: Optional[float] = None, backend: str = "bnb") -> Assignment:
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown backend {backend!r}; choose from {sorted(BACKENDS)}") from None
    return fn(inst, time_budget)


def assign_detectors(
    problem: AllocationProblem, time_budget: Optional[float] = None, backend: str = "bnb"
) -> Assignment:
    """Filter detectors, size the horizon, build and solve the program."""
    dets = get_detectors(problem)
    if not dets:
        return Assignment(status=Status.EMPTY)
    get_lcm(dets, problem.processing_frame_rate)
    return solve_ilp(build_ilp(problem), time_budget, backend)
