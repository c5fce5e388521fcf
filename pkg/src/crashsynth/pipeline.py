"""End-to-end orchestration: ingestion, tracking, 3D positioning, lane
localization, trajectory smoothing, and scenario export.

Everything here is deterministic: identical inputs and config produce
byte-identical output files.
"""

import logging
import math
import os

import numpy as np

from . import io_formats, lanes, scenario, trajectory
from .camera_geometry import (
    CameraIntrinsics,
    CalibrationInfeasibleError,
    PixelMask,
    backproject_masked,
    calibrate_from_lanes,
    estimate_position,
)
from .config import PipelineConfig
from .lanes import LaneTracker, ego_lane_fix
from .tracking import TrackSet, TrackState

log = logging.getLogger(__name__)


class MissingInputError(FileNotFoundError):
    """A mandatory pipeline input is absent."""


class Diagnostics:
    """Ordered, deterministic run log: counters plus warnings."""

    def __init__(self):
        self.counters = {}
        self.warnings = []

    def count(self, key, n=1):
        self.counters[key] = self.counters.get(key, 0) + n

    def warn(self, message):
        self.warnings.append(message)
        log.warning(message)

    def render(self):
        lines = ["# pipeline diagnostics"]
        for key in sorted(self.counters):
            lines.append(f"{key} = {self.counters[key]}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines) + "\n"


def _resolve_intrinsics(config, lane_frames, diag):
    base = CameraIntrinsics(
        f_u=config.focal_length,
        f_v=config.focal_length,
        c_u=config.image_width / 2.0,
        c_v=config.image_height / 2.0,
        width=config.image_width,
        height=config.image_height,
    )
    if config.intrinsics_source != "calibrate":
        return base
    if not lane_frames:
        diag.warn("calibration requested but no lane data; using configured intrinsics")
        return base
    tracker = LaneTracker(config.lane_max_cost, config.lane_survival_frames,
                          config.dbscan_eps, config.dbscan_min_pts)
    for frame in sorted(lane_frames):
        pixels = lanes.lower_band(
            lanes.to_bottom_left(lane_frames[frame], config.image_height),
            config.image_height,
        )
        obs = tracker.observe(frame, pixels, config.image_width)
        if len(obs) < 2:
            continue
        # boundary pair straddling the camera column
        fix_pair = None
        for left, right in zip(obs, obs[1:]):
            if left.x_intercept <= base.c_u <= right.x_intercept:
                fix_pair = (left, right)
                break
        if fix_pair is None:
            continue
        try:
            cal = calibrate_from_lanes(
                fix_pair[0].line, fix_pair[1].line, config.lane_width,
                config.camera_height, config.image_width, config.image_height,
            )
            diag.count("calibration_frames_used")
            return cal
        except CalibrationInfeasibleError as exc:
            diag.warn(f"calibration infeasible on frame {frame}: {exc}; "
                      "falling back to configured intrinsics")
            return base
    diag.warn("no frame offered two straddling lanes; using configured intrinsics")
    return base


def _depth_frames(input_dir):
    depth_dir = os.path.join(input_dir, "depth")
    if not os.path.isdir(depth_dir):
        raise MissingInputError(f"missing depth map directory {depth_dir}")
    frames = {}
    for name in sorted(os.listdir(depth_dir)):
        if name.endswith(".pgm"):
            frames[int(name[:-4])] = os.path.join(depth_dir, name)
    if not frames:
        raise MissingInputError(f"no .pgm depth maps under {depth_dir}")
    return frames


def _mask_for(det, depth_map, input_dir):
    if det.mask_file:
        path = os.path.join(input_dir, det.mask_file)
        if os.path.isfile(path):
            return io_formats.read_mask_png(path)
    member = np.zeros((depth_map.height, depth_map.width), dtype=bool)
    u0 = max(0, int(math.floor(det.bbox.u_min)))
    v0 = max(0, int(math.floor(det.bbox.v_min)))
    u1 = min(depth_map.width, int(math.ceil(det.bbox.u_max)))
    v1 = min(depth_map.height, int(math.ceil(det.bbox.v_max)))
    member[v0:v1, u0:u1] = True
    return PixelMask(depth_map.width, depth_map.height, member)


def run_pipeline(input_dir, config, output_path):
    """Execute the full extraction chain and export a scenario.

    Returns:
        (ScenarioSpec, Diagnostics)
    """
    if isinstance(config, (str, os.PathLike)):
        config = PipelineConfig.from_file(config)
    diag = Diagnostics()

    det_path = os.path.join(input_dir, "detections.jsonl")
    if not os.path.isfile(det_path):
        raise MissingInputError(f"missing detections file {det_path}")
    detections = io_formats.read_detections_jsonl(det_path)
    depth_paths = _depth_frames(input_dir)
    lane_frames = io_formats.load_lane_source(input_dir)
    odo_path = os.path.join(input_dir, "odometry.csv")
    odometry = io_formats.read_odometry_csv(odo_path) if os.path.isfile(odo_path) else None
    if config.ego_mode == "from_odometry" and odometry is None:
        raise MissingInputError(f"ego_mode=from_odometry needs {odo_path}")

    frame_count = max(depth_paths) + 1
    all_frames = list(range(frame_count))
    if not detections:
        diag.warn("detections file is empty: scenario will contain the ego only")

    intrinsics = _resolve_intrinsics(config, lane_frames, diag)

    # tracking over every frame (absent frames carry zero detections)
    tracker = TrackSet(config.birth_hits, config.death_misses, config.iou_threshold)
    for frame in all_frames:
        tracker.step(frame, detections.get(frame, []))
    confirmed = [t for t in sorted(tracker.tracks.values(), key=lambda t: t.id)
                 if t.hits >= config.birth_hits or t.state in (TrackState.ACTIVE, TrackState.LOST)
                 or (t.state is TrackState.DEAD and len(t.history) >= config.birth_hits)]
    diag.count("tracks_total", len(tracker.tracks))
    diag.count("tracks_confirmed", len(confirmed))

    # per-track relative 3D observations from masked depth clouds
    relative = {t.id: {} for t in confirmed}
    depth_cache_frame, depth_cache = None, None
    for track in confirmed:
        for frame in sorted(track.history):
            if frame not in depth_paths:
                diag.count("frames_without_depth")
                continue
            if depth_cache_frame != frame:
                depth_cache = io_formats.read_depth_pgm(depth_paths[frame], config.depth_scale)
                depth_cache_frame = frame
                if (depth_cache.width, depth_cache.height) != \
                        (config.image_width, config.image_height):
                    raise ValueError(
                        f"depth map {depth_paths[frame]} is "
                        f"{depth_cache.width}x{depth_cache.height} but the config "
                        f"declares {config.image_width}x{config.image_height}: "
                        "intrinsics would not match the pixels"
                    )
            det = track.history[frame]
            mask = _mask_for(det, depth_cache, input_dir)
            cloud = backproject_masked(depth_cache, mask, intrinsics, config.max_depth)
            if len(cloud) == 0:
                diag.count("empty_clouds")
                continue
            relative[track.id][frame] = estimate_position(cloud)

    # ego trajectory and lane-based lateral correction
    ego = trajectory.ego_trajectory(
        config.ego_mode, odometry=odometry, speed=config.ego_speed,
        frame_count=frame_count, frame_rate=config.frame_rate,
    )
    fixes = []
    if lane_frames:
        lane_tracker = LaneTracker(config.lane_max_cost, config.lane_survival_frames,
                                   config.dbscan_eps, config.dbscan_min_pts)
        for frame in sorted(lane_frames):
            if frame >= frame_count:
                continue
            pixels = lanes.lower_band(
                lanes.to_bottom_left(lane_frames[frame], config.image_height),
                config.image_height,
            )
            obs = lane_tracker.observe(frame, pixels, config.image_width)
            fix = ego_lane_fix(obs, intrinsics.c_u, config.lane_width, frame)
            if fix is not None:
                fixes.append(fix)
        diag.count("lateral_fixes", len(fixes))
        ego, warnings = trajectory.apply_lane_correction(ego, fixes, config.lane_width)
        for w in warnings:
            diag.warn(w)

    # agent world trajectories: compose, gap-fill/split, smooth
    agent_outputs = []
    next_vehicle_id = 1
    for track in confirmed:
        obs = relative[track.id]
        if len(obs) < 2:
            diag.count("tracks_dropped_short")
            continue
        composed = trajectory.compose_agent_trajectory(ego, obs, track.id)
        segments = trajectory.split_and_fill(
            composed.frames, composed.x, composed.y, config.max_fill_gap
        )
        if len(segments) > 1:
            diag.count("tracks_split", len(segments) - 1)
        for frames, xs, ys in segments:
            if frames.size < 4:
                diag.count("segments_dropped_short")
                continue
            agent_outputs.append((next_vehicle_id, frames, xs, ys))
            next_vehicle_id += 1

    smoothed_agents = []
    agent_smooths = {}
    for vid, frames, xs, ys in agent_outputs:
        if frames.size >= config.sg_window:
            xs = trajectory.savitzky_golay(xs, config.sg_window, config.sg_polyorder)
            ys = trajectory.savitzky_golay(ys, config.sg_window, config.sg_polyorder)
        traj = trajectory.Trajectory(
            vehicle_id=vid, frames=frames, t=frames / config.frame_rate,
            x=xs, y=ys, yaw=trajectory._tangent_headings(xs, ys),
            speeds=np.zeros(frames.size),
        )
        smooth, warnings = trajectory.smooth_two_level(
            traj, config.local_window, config.local_smoothness, config.global_smoothness
        )
        for w in warnings:
            diag.warn(f"vehicle {vid}: {w}")
        pos = smooth.position(smooth.pose_u)
        traj = traj.replace(x=pos[:, 0], y=pos[:, 1],
                            yaw=trajectory._tangent_headings(pos[:, 0], pos[:, 1]))
        traj.speeds = trajectory.estimate_speeds(traj, config.frame_rate)
        smoothed_agents.append(traj)
        agent_smooths[vid] = smooth

    # ego smoothing
    ego_sx = trajectory.savitzky_golay(ego.x, config.sg_window, config.sg_polyorder) \
        if len(ego) >= config.sg_window else ego.x
    ego_sy = trajectory.savitzky_golay(ego.y, config.sg_window, config.sg_polyorder) \
        if len(ego) >= config.sg_window else ego.y
    ego_in = ego.replace(x=ego_sx, y=ego_sy)
    ego_smooth, warnings = trajectory.smooth_two_level(
        ego_in, config.local_window, config.local_smoothness, config.global_smoothness
    )
    for w in warnings:
        diag.warn(f"ego: {w}")
    ego_pos = ego_smooth.position(ego_smooth.pose_u)
    ego_final = ego.replace(x=ego_pos[:, 0], y=ego_pos[:, 1],
                            yaw=trajectory._tangent_headings(ego_pos[:, 0], ego_pos[:, 1]))
    ego_final.speeds = trajectory.estimate_speeds(ego_final, config.frame_rate)

    # classification, road, extrapolation
    categorized = []
    oncoming_smooth = []
    for traj in smoothed_agents:
        label = scenario.classify_agent(traj, ego_final)
        categorized.append((traj, label))
        diag.count(f"category_{label}")
        if label.startswith("D1"):
            oncoming_smooth.append(agent_smooths[traj.vehicle_id])

    road = scenario.generate_road(
        ego_smooth, oncoming_smooth, config.lane_count, config.lane_width,
        config.road_knot_spacing,
    )
    sim_duration = config.sim_duration or (frame_count - 1) / config.frame_rate

    vehicles = []
    stepback_targets = {0: float(ego_final.speeds[0])}
    results = {}
    for traj, label in categorized:
        result = scenario.extrapolate(traj, label, road, ego_final,
                                      sim_duration, config.frame_rate,
                                      config.standoff)
        for w in result.warnings:
            diag.warn(w)
        results[traj.vehicle_id] = result
        if result.start_delay == 0.0:
            stepback_targets[traj.vehicle_id] = float(result.trajectory.speeds[0])

    table = scenario.compute_stepback(stepback_targets, config.accel)
    diag.count("stepback_t_max_ms", int(round(table.t_s_max * 1000)))

    ego_lead, ego_lead_speeds = scenario.build_leadin(
        ego_final, table.entries[0], table.t_s_max, config.frame_rate, config.accel
    )
    vehicles.append(scenario.VehicleSpec(
        id=0, category="ego", start_delay=0.0, lead_in=ego_lead,
        waypoints=ego_final.positions, speeds=ego_final.speeds,
    ))
    for traj, label in categorized:
        result = results[traj.vehicle_id]
        out = result.trajectory
        if result.start_delay == 0.0:
            lead, _ = scenario.build_leadin(
                out, table.entries[traj.vehicle_id], table.t_s_max,
                config.frame_rate, config.accel,
            )
        else:
            lead = np.empty((0, 2))  # delayed vehicles wait parked instead
        vehicles.append(scenario.VehicleSpec(
            id=traj.vehicle_id, category=label, start_delay=result.start_delay,
            lead_in=lead, waypoints=out.positions, speeds=out.speeds,
        ))

    spec = scenario.ScenarioSpec(
        road=road, vehicles=vehicles, frame_rate=config.frame_rate,
        meta={
            "origin": "world origin at the initial ego pose, x along its heading",
            "recreation_starts_at": f"{table.t_s_max:.6f}",
        },
    )
    for conflict in scenario.check_overlaps(spec, config.min_gap):
        diag.warn(
            f"vehicles {conflict.vehicle_a} and {conflict.vehicle_b} start "
            f"{conflict.distance:.2f} m apart (min gap {config.min_gap} m)"
        )

    out_dir = os.path.dirname(os.path.abspath(output_path)) or "."
    os.makedirs(out_dir, exist_ok=True)
    scenario.export_scenario(spec, str(output_path))
    io_formats.write_trajectory_csv(os.path.join(out_dir, "trajectory_000_ego.csv"), ego_final)
    for traj, label in categorized:
        result = results[traj.vehicle_id]
        io_formats.write_trajectory_csv(
            os.path.join(out_dir, f"trajectory_{traj.vehicle_id:03d}.csv"),
            result.trajectory,
        )
    with open(os.path.join(out_dir, "diagnostics.txt"), "w", encoding="utf-8") as fh:
        fh.write(diag.render())
    log.info("pipeline complete: %d vehicles, road length %.1f m",
             len(vehicles), road.length)
    return spec, diag


def run_scenes(scene_dirs, config, output_root, workers=None):
    """Run independent scenes through the pipeline in a worker pool.

    Each scene keeps its own single-writer state; results land under
    output_root/<scene_name>/scenario.json. Returns {scene_dir: exception or
    (ScenarioSpec, Diagnostics)} in input order.
    """
    import concurrent.futures

    if isinstance(config, (str, os.PathLike)):
        config = PipelineConfig.from_file(config)
    if workers is None:
        workers = config.workers if config is not None else 1

    def one(scene_dir):
        scene_config = config
        if scene_config is None:
            candidate = os.path.join(scene_dir, "config.toml")
            scene_config = (PipelineConfig.from_file(candidate)
                            if os.path.isfile(candidate) else PipelineConfig())
        name = os.path.basename(os.path.normpath(scene_dir))
        out = os.path.join(output_root, name, "scenario.json")
        return run_pipeline(scene_dir, scene_config, out)

    results = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = {scene: pool.submit(one, scene) for scene in scene_dirs}
        for scene in scene_dirs:
            try:
                results[scene] = futures[scene].result()
            except Exception as exc:  # surfaced per scene, not fatal to the batch
                results[scene] = exc
    return results
