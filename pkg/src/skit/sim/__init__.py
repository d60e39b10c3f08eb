"""Synthetic scenarios and detectors that replay the fusion pipeline."""
from .detectors import SampledDetection, frame_rng, sample_detections
from .render import Projection, camera_at, render_frame
from .run import Report, match_locations, run_experiment, write_report
from .scenario import (
    CameraSpec,
    PipelineConfig,
    Scenario,
    ScenarioError,
    SyntheticDetectorSpec,
    Trajectory,
    WorldObject,
    apply_overrides,
    dumps_scenario,
    read_scenario,
    scenario_from_dict,
    scenario_to_dict,
    write_scenario,
)

__all__ = [
    "SampledDetection",
    "frame_rng",
    "sample_detections",
    "Projection",
    "camera_at",
    "render_frame",
    "Report",
    "match_locations",
    "run_experiment",
    "write_report",
    "CameraSpec",
    "PipelineConfig",
    "Scenario",
    "ScenarioError",
    "SyntheticDetectorSpec",
    "Trajectory",
    "WorldObject",
    "apply_overrides",
    "dumps_scenario",
    "read_scenario",
    "scenario_from_dict",
    "scenario_to_dict",
    "write_scenario",
]
