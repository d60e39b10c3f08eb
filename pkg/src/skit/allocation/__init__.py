"""Detector-to-stream allocation as an integer program."""
from .ilp import IlpInstance, build_ilp, problem_size, to_lp, parse_solution
from .model import (
    INTRA_SITE,
    AllocationProblem,
    Assignment,
    DetectorProfile,
    Machine,
    ProblemError,
    SizingError,
    Status,
    get_detectors,
    get_lcm,
    period_from_time,
)
from .problem_io import read_assignment, read_problem, write_assignment, write_problem
from .solver import assign_detectors, assignment_from_vector, frame_offsets, solve_ilp
from .verify import verify_assignment

__all__ = [
    "INTRA_SITE",
    "AllocationProblem",
    "Assignment",
    "DetectorProfile",
    "Machine",
    "ProblemError",
    "SizingError",
    "Status",
    "IlpInstance",
    "get_detectors",
    "get_lcm",
    "period_from_time",
    "build_ilp",
    "problem_size",
    "to_lp",
    "parse_solution",
    "solve_ilp",
    "assign_detectors",
    "assignment_from_vector",
    "frame_offsets",
    "verify_assignment",
    "read_problem",
    "write_problem",
    "read_assignment",
    "write_assignment",
]
