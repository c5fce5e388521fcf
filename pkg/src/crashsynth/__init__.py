"""crashsynth: monocular dashcam perception data to simulator-ready crash
scenarios, with tracking, 3D positioning, lane localization, smoothing,
scenario synthesis, and CLEAR-MOT evaluation."""

__version__ = "0.1.0"

from .camera_geometry import (
    CameraIntrinsics,
    DepthMap,
    ImageLine,
    PixelMask,
    Point3,
    PointCloud,
    backproject_masked,
    backproject_pixel,
    calibrate_from_lanes,
    estimate_position,
    project_point,
)
from .config import PipelineConfig
from .lanes import LaneTracker, cluster_lane_pixels, directed_hausdorff, lateral_offset
from .metrics import MetricsReport, absolutize_ground_truth, evaluate
from .pipeline import run_pipeline
from .scenario import (
    RoadSpec,
    ScenarioSpec,
    VehicleSpec,
    build_leadin,
    check_overlaps,
    classify_agent,
    compute_stepback,
    export_scenario,
    extrapolate,
    generate_road,
    load_scenario,
)
from .synthetic import generate_synthetic
from .tracking import BBox2D, Detection, Track, TrackSet, associate_frame, iou, solve_assignment
from .trajectory import (
    Trajectory,
    apply_lane_correction,
    compose_agent_trajectory,
    ego_trajectory,
    estimate_speeds,
    savitzky_golay,
    smooth_two_level,
)
