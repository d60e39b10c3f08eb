"""Integer program for detector allocation: variables, tagged rows, LP text."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import INTRA_SITE, AllocationProblem, SizingError, get_detectors, get_lcm

TAGS = (
    "detPerStream",
    "detPerFrame_lower",
    "detPerFrame_upper",
    "frame_timing",
    "bandwidth",
    "ram",
    "exclusive_machines",
    "link_used",
)


@dataclass(frozen=True)
class Row:
    tag: str
    name: str
    coeffs: dict  # var index -> coefficient
    lo: float
    hi: float


@dataclass
class IlpInstance:
    """A built instance plus the index maps needed to read a solution back.

    The objective is maximised. Variables are ordered ``x`` (stream,
    detector, bitrate), then ``y`` (stream, detector, frame), then
    ``linkUsed`` (stream, site).
    """

    problem: AllocationProblem
    detectors: list
    periods: list
    horizon: int
    big_m: int
    names: list
    kinds: list  # "binary" or "integer"
    upper: list
    objective: np.ndarray
    rows: list
    sos1: list = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return len(self.names)

    @property
    def n_constraints(self) -> int:
        return len(self.rows)

    def x(self, v: int, d: int, b: int) -> int:
        nb = len(self.problem.bitrates)
        return (v * len(self.detectors) + d) * nb + b

    def y(self, v: int, d: int, f: int) -> int:
        nx = len(self.problem.streams) * len(self.detectors) * len(self.problem.bitrates)
        return nx + (v * len(self.detectors) + d) * self.horizon + f

    def link(self, v: int, s: int) -> int:
        nv, nd = len(self.problem.streams), len(self.detectors)
        nx = nv * nd * len(self.problem.bitrates)
        return nx + nv * nd * self.horizon + v * len(self.problem.sites) + s

    def rows_by_tag(self, tag: str) -> list:
        return [r for r in self.rows if r.tag == tag]


def problem_size(problem: AllocationProblem) -> tuple[int, int]:
    """Closed-form variable and constraint counts of the instance."""
    dets = get_detectors(problem)
    if not dets:
        return 0, 0
    rate = problem.processing_frame_rate
    F = get_lcm(dets, rate)
    V, D, B, S, M = (
        len(problem.streams),
        len(dets),
        len(problem.bitrates),
        len(problem.sites),
        len(problem.machines),
    )
    n_vars = V * (D * (B + F) + S)
    n_cons = M + V * (1 + 2 * (F + S)) + sum((F - problem.period(d) + 1) * V for d in dets)
    return n_vars, n_cons


def build_ilp(problem: AllocationProblem, max_vars: int = 5_000_000) -> IlpInstance:
    dets = get_detectors(problem)
    if not dets:
        raise ValueError("no detector fits the frame time budget")
    rate = problem.processing_frame_rate
    F = get_lcm(dets, rate)
    periods = [problem.period(d) for d in dets]
    V, S, B = problem.streams, problem.sites, problem.bitrates
    nV, nD, nB, nS = len(V), len(dets), len(B), len(S)
    n_vars = nV * (nD * (nB + F) + nS)
    if n_vars > max_vars:
        raise SizingError(f"{n_vars} variables exceed the limit of {max_vars}")
    # the link counter is a 0/1 indicator as long as M covers every detector of a stream
    big_m = max(nS, problem.det_per_stream)

    names, kinds, upper = [], [], []
    obj = np.zeros(n_vars)
    for v in range(nV):
        for d in range(nD):
            for b in range(nB):
                names.append(f"x_{v}_{d}_{b}")
                kinds.append("binary")
                upper.append(1)
    for v in range(nV):
        for d in range(nD):
            for f in range(F):
                names.append(f"y_{v}_{d}_{f}")
                kinds.append("binary")
                upper.append(1)
    for v in range(nV):
        for s in range(nS):
            names.append(f"L_{v}_{s}")
            kinds.append("integer")
            upper.append(nS)

    inst = IlpInstance(problem, dets, periods, F, big_m, names, kinds, upper, obj, [])
    w = problem.w
    site_index = {s: i for i, s in enumerate(S)}
    det_site = [site_index[problem.site_of(d)] for d in dets]
    for v in range(nV):
        for d, det in enumerate(dets):
            for b in range(nB):
                obj[inst.x(v, d, b)] = w * B[b] / periods[d] * det.accuracy[b]
        for s in range(nS):
            obj[inst.link(v, s)] = -(1.0 - w)

    rows = inst.rows
    # machine memory, or the one-detector-per-machine variant
    for m in problem.machines:
        coeffs = {}
        for d, det in enumerate(dets):
            if det.machine_id != m.id:
                continue
            for v in range(nV):
                for b in range(nB):
                    coeffs[inst.x(v, d, b)] = 1.0 if problem.exclusive_machines else float(det.ram)
        if problem.exclusive_machines:
            rows.append(Row("exclusive_machines", f"excl_{m.id}", coeffs, -math.inf, 1.0))
        else:
            rows.append(Row("ram", f"ram_{m.id}", coeffs, -math.inf, float(m.ram)))
    for v in range(nV):
        coeffs = {inst.x(v, d, b): 1.0 for d in range(nD) for b in range(nB)}
        rows.append(Row("detPerStream", f"dps_{v}", coeffs, -math.inf, float(problem.det_per_stream)))
        for f in range(F):
            coeffs = {inst.y(v, d, f): 1.0 for d in range(nD)}
            rows.append(Row("detPerFrame_lower", f"dpf_lo_{v}_{f}", coeffs, 1.0, math.inf))
            rows.append(Row("detPerFrame_upper", f"dpf_hi_{v}_{f}", dict(coeffs), -math.inf, float(problem.det_per_frame)))
        for s in range(nS):
            bw = problem.link_bw(V[v], S[s])
            coeffs = {
                inst.x(v, d, b): B[b] / periods[d] for d in range(nD) if det_site[d] == s for b in range(nB)
            }
            hi = math.inf if bw is INTRA_SITE else float(bw)
            rows.append(Row("bandwidth", f"bw_{v}_{s}", coeffs, -math.inf, hi))
            coeffs = {inst.x(v, d, b): 1.0 for d in range(nD) if det_site[d] == s for b in range(nB)}
            coeffs[inst.link(v, s)] = -float(big_m)
            rows.append(Row("link_used", f"link_{v}_{s}", coeffs, -math.inf, 0.0))
    for v in range(nV):
        for d in range(nD):
            p = periods[d]
            xs = [inst.x(v, d, b) for b in range(nB)]
            for k in range(F - p + 1):
                coeffs = {inst.y(v, d, f): 1.0 for f in range(k, k + p)}
                for i in xs:
                    coeffs[i] = -1.0
                rows.append(Row("frame_timing", f"ft_{v}_{d}_{k}", coeffs, 0.0, 0.0))
            # at most one bitrate per (stream, detector); kept as a special ordered set
            inst.sos1.append(xs)
    return inst


def _fmt(c: float) -> str:
    return repr(float(c))


def _terms(coeffs: dict, names: list) -> str:
    parts = []
    for i in sorted(coeffs):
        c = coeffs[i]
        sign = "-" if c < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(c))} {names[i]}")
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


def to_lp(inst: IlpInstance) -> str:
    """CPLEX LP text. Rows with an infinite bound (intra-site links) are left out."""
    lines = ["\\ detector allocation", "Maximize"]
    nz = {i: c for i, c in enumerate(inst.objective) if c != 0.0}
    lines.append(" obj: " + (_terms(nz, inst.names) or "0 " + inst.names[0]))
    lines.append("Subject To")
    for r in inst.rows:
        body = _terms(r.coeffs, inst.names)
        if not body:
            continue
        if r.lo == r.hi:
            lines.append(f" {r.name}: {body} = {_fmt(r.hi)}")
            continue
        if math.isfinite(r.hi):
            lines.append(f" {r.name}: {body} <= {_fmt(r.hi)}")
        if math.isfinite(r.lo):
            suffix = "_ge" if math.isfinite(r.hi) else ""
            lines.append(f" {r.name}{suffix}: {body} >= {_fmt(r.lo)}")
    lines.append("Bounds")
    for i, k in enumerate(inst.kinds):
        if k == "integer":
            lines.append(f" 0 <= {inst.names[i]} <= {inst.upper[i]}")
    lines.append("Binaries")
    lines.append(" " + " ".join(n for n, k in zip(inst.names, inst.kinds) if k == "binary"))
    lines.append("Generals")
    lines.append(" " + " ".join(n for n, k in zip(inst.names, inst.kinds) if k == "integer"))
    if inst.sos1:
        lines.append("SOS")
        for j, group in enumerate(inst.sos1):
            if len(group) > 1:
                members = " ".join(f"{inst.names[i]}:{w + 1}" for w, i in enumerate(group))
                lines.append(f" sos_{j}: S1:: {members}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def parse_solution(text: str, inst: IlpInstance) -> np.ndarray:
    """Read ``name value`` pairs (one per line) into a variable vector.

    Lines that do not name a known variable are skipped, so the column
    section of most solver solution files can be fed in directly.
    """
    index = {n: i for i, n in enumerate(inst.names)}
    out = np.zeros(inst.n_vars)
    for line in text.splitlines():
        parts = line.replace("=", " ").split()
        for a, b in zip(parts, parts[1:]):
            if a in index:
                try:
                    out[index[a]] = float(b)
                except ValueError:
                    continue
                break
    return out
