"""Problem description types and the pre-processing steps before the ILP."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

HORIZON_CAP = 5040


class _IntraSite:
    """Marker for a stream that is produced at the processing site itself."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INTRA_SITE"

    def __reduce__(self):
        return (_IntraSite, ())


INTRA_SITE = _IntraSite()


class SizingError(ValueError):
    """The cyclic horizon or the instance is too large to build."""


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Machine:
    id: str
    site_id: str
    ram: float
    kind: str = "cpu"

    def __post_init__(self):
        if self.ram <= 0:
            raise ProblemError(f"machine {self.id}: ram must be positive")
        if self.kind not in ("cpu", "gpu", "cpu+gpu"):
            raise ProblemError(f"machine {self.id}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class DetectorProfile:
    """One detector runnable on one machine.

    ``accuracy`` holds one value per bitrate level of the problem, in the same
    (ascending) order as ``AllocationProblem.bitrates``.
    """

    id: str
    machine_id: str
    nominal_time: float
    accuracy: tuple
    ram: float
    network: str = ""

    def __post_init__(self):
        if self.nominal_time <= 0:
            raise ProblemError(f"detector {self.id}: nominal time must be positive")
        if self.ram <= 0:
            raise ProblemError(f"detector {self.id}: ram must be positive")
        object.__setattr__(self, "accuracy", tuple(float(a) for a in self.accuracy))
        if any(not 0.0 <= a <= 1.0 for a in self.accuracy):
            raise ProblemError(f"detector {self.id}: accuracy outside [0, 1]")


def period_from_time(nominal_time: float, rate: float) -> int:
    """Frames a detector is busy for: ``ceil(time * rate)``, at least one."""
    if nominal_time <= 0 or rate <= 0:
        raise ValueError("nominal_time and rate must be positive")
    # 0.1 s * 30 Hz is 3.0000000000000004 in binary floating point
    return max(1, math.ceil(round(nominal_time * rate, 9)))


@dataclass(frozen=True)
class AllocationProblem:
    streams: tuple
    sites: tuple
    machines: tuple
    detectors: tuple
    bitrates: tuple
    links: Mapping = field(default_factory=dict)
    processing_frame_rate: float = 30.0
    max_processing_time: float = 1.0
    det_per_stream: int = 1
    det_per_frame: int = 1
    w: float = 0.5
    exclusive_machines: bool = False

    def __post_init__(self):
        for name in ("streams", "sites", "machines", "detectors", "bitrates"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "links", dict(self.links))
        if not self.bitrates:
            raise ProblemError("at least one bitrate level is required")
        if list(self.bitrates) != sorted(self.bitrates) or len(set(self.bitrates)) != len(self.bitrates):
            raise ProblemError("bitrates must be strictly ascending")
        if self.det_per_frame < 1 or self.det_per_stream < 1:
            raise ProblemError("det_per_frame and det_per_stream must be at least 1")
        if not 0.0 <= self.w <= 1.0:
            raise ProblemError("w must lie in [0, 1]")
        if self.processing_frame_rate <= 0 or self.max_processing_time <= 0:
            raise ProblemError("frame rate and max processing time must be positive")
        for ids, what in ((self.streams, "stream"), (self.sites, "site")):
            if len(set(ids)) != len(ids):
                raise ProblemError(f"duplicate {what} id")
        machine_ids = [m.id for m in self.machines]
        if len(set(machine_ids)) != len(machine_ids):
            raise ProblemError("duplicate machine id")
        for m in self.machines:
            if m.site_id not in self.sites:
                raise ProblemError(f"machine {m.id} refers to unknown site {m.site_id}")
        det_ids = [d.id for d in self.detectors]
        if len(set(det_ids)) != len(det_ids):
            raise ProblemError("duplicate detector id")
        for d in self.detectors:
            if d.machine_id not in machine_ids:
                raise ProblemError(f"detector {d.id} refers to unknown machine {d.machine_id}")
            if len(d.accuracy) != len(self.bitrates):
                raise ProblemError(f"detector {d.id}: need one accuracy per bitrate level")
        for (v, s), bw in self.links.items():
            if v not in self.streams or s not in self.sites:
                raise ProblemError(f"link ({v}, {s}) refers to an unknown stream or site")
            if bw is not INTRA_SITE and bw < 0:
                raise ProblemError(f"link ({v}, {s}) has negative bandwidth")

    # lookups
    def machine(self, machine_id: str) -> Machine:
        return next(m for m in self.machines if m.id == machine_id)

    def site_of(self, det: DetectorProfile) -> str:
        return self.machine(det.machine_id).site_id

    def period(self, det: DetectorProfile) -> int:
        return period_from_time(det.nominal_time, self.processing_frame_rate)

    def link_bw(self, stream: str, site: str):
        """Bandwidth in kbps, ``INTRA_SITE`` or 0 when there is no connection."""
        return self.links.get((stream, site), 0.0)

    @property
    def max_frame_time(self) -> float:
        return min(self.max_processing_time, self.det_per_stream / self.processing_frame_rate)

    def replace(self, **kw) -> "AllocationProblem":
        import dataclasses

        return dataclasses.replace(self, **kw)


def get_detectors(problem: AllocationProblem) -> list[DetectorProfile]:
    """Detectors whose nominal time fits the per-frame time budget."""
    limit = problem.max_frame_time
    return [d for d in problem.detectors if d.nominal_time <= limit * (1 + 1e-12)]


def get_lcm(detectors: Sequence, rate: Optional[float] = None, cap: int = HORIZON_CAP) -> int:
    """Cyclic horizon: least common multiple of the periods.

    Accepts integer periods directly, or detector profiles together with the
    processing rate.
    """
    if not detectors:
        raise ValueError("need at least one detector")
    periods = [d if isinstance(d, int) else period_from_time(d.nominal_time, rate) for d in detectors]
    out = 1
    for p in periods:
        out = math.lcm(out, p)
        if out > cap:
            raise SizingError(f"cyclic horizon exceeds {cap} frames")
    return out


class Status(enum.Enum):
    OPTIMAL = "optimal"
    TIMEOUT = "timeout"
    INFEASIBLE = "infeasible"
    EMPTY = "empty"


@dataclass(frozen=True)
class Assignment:
    """Solver output.

    ``chosen`` holds ``(stream_id, detector_id, bitrate_kbps)`` triples;
    ``schedule`` maps a stream to one tuple of detector ids per frame of the
    cyclic horizon.
    """

    chosen: tuple = ()
    schedule: Mapping = field(default_factory=dict)
    links_used: Mapping = field(default_factory=dict)
    objective_value: float = 0.0
    horizon: int = 0
    status: Status = Status.OPTIMAL

    @property
    def feasible(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.TIMEOUT, Status.EMPTY) and (
            self.status is not Status.TIMEOUT or bool(self.chosen)
        )

    def detectors_for(self, stream: str) -> list[str]:
        return [d for v, d, _ in self.chosen if v == stream]
