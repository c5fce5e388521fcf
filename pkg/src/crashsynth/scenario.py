"""Agent taxonomy, trajectory extrapolation, road waypoint generation,
step-back lead-in synchronization, overlap checks, and scenario export.

Vehicles start from rest in the simulator, so every vehicle gets a straight
constant-acceleration lead-in sized so that all of them reach their first
observed speed simultaneously; the recreated clip begins at that instant.
"""

import json
import math
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np
from scipy import interpolate

from .trajectory import Trajectory, normalize_yaw, _chord_parameter

CATEGORIES = ("D0T1", "D0T2", "D0T3", "D1T1", "D1T2", "D1T3", "D1T4")

DEFAULT_ACCEL = 2.5  # m/s^2, comfortable launch acceleration
DEFAULT_MIN_GAP = 6.0  # meters, vehicle length plus margin
DEFAULT_STANDOFF = 8.0  # meters kept behind the ego while mimicking it
COLLISION_RADIUS = 2.0  # agent-ego distance marking the collision frame
ROAD_SPACING = 2.0  # meters between road centerline waypoints
SEGMENT_GAP_LIMIT = 1.0  # max allowed seam between lead-in and main waypoints
OVERTAKEN_SPEED_FACTOR = 0.9  # cap for extending overtaken same-direction agents


class ClassificationError(ValueError):
    """Agent cannot be classified (too few poses or no shared frames)."""


class RoadError(ValueError):
    """Road geometry violates its invariants."""


class ScenarioValidationError(ValueError):
    """Scenario violates an export invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


# ---------------------------------------------------------------------------
# road geometry
# ---------------------------------------------------------------------------

def _cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _polyline_self_intersects(pts):
    """Any proper crossing between non-adjacent segments (vectorized)."""
    a = pts[:-1]
    d = np.diff(pts, axis=0)
    n = a.shape[0]
    for i in range(n - 2):
        js = np.arange(i + 2, n)
        p3, d2 = a[js], d[js]
        d1 = d[i]
        s1 = _cross2(d2, a[i] - p3)
        s2 = _cross2(d2, a[i] + d1 - p3)
        s3 = _cross2(d1[None, :], p3 - a[i])
        s4 = _cross2(d1[None, :], p3 + d2 - a[i])
        if np.any(((s1 > 0) != (s2 > 0)) & ((s3 > 0) != (s4 > 0))):
            return True
    return False


@dataclass
class RoadSpec:
    """Centerline waypoints plus lane layout; supports arc-length lookups."""

    centerline: np.ndarray  # (N, 2) meters
    lane_count: int
    lane_width: float

    def __post_init__(self):
        self.centerline = np.asarray(self.centerline, dtype=np.float64).reshape(-1, 2)
        if self.centerline.shape[0] < 2:
            raise RoadError("road needs at least two centerline waypoints")
        if self.lane_count < 1 or self.lane_width <= 0:
            raise RoadError("road needs lane_count >= 1 and positive lane_width")
        gaps = np.linalg.norm(np.diff(self.centerline, axis=0), axis=1)
        if (gaps < 0.5).any() or (gaps > 20.0).any():
            raise RoadError(
                f"centerline spacing outside [0.5, 20] m (range {gaps.min():.2f}..{gaps.max():.2f})"
            )
        if _polyline_self_intersects(self.centerline):
            raise RoadError("centerline self-intersects")
        self._s = _chord_parameter(self.centerline[:, 0], self.centerline[:, 1])

    @property
    def length(self):
        return float(self._s[-1])

    def point_at(self, s):
        s = np.clip(s, 0.0, self.length)
        x = np.interp(s, self._s, self.centerline[:, 0])
        y = np.interp(s, self._s, self.centerline[:, 1])
        return np.array([x, y])

    def tangent_at(self, s):
        s = float(np.clip(s, 0.0, self.length))
        i = int(np.clip(np.searchsorted(self._s, s, side="right") - 1, 0,
                        self.centerline.shape[0] - 2))
        d = self.centerline[i + 1] - self.centerline[i]
        return d / np.linalg.norm(d)

    def project(self, point):
        """Closest arc position and signed lateral offset (left positive)."""
        p = np.asarray(point, dtype=np.float64)
        best = (np.inf, 0.0, 0.0)
        for i in range(self.centerline.shape[0] - 1):
            a = self.centerline[i]
            d = self.centerline[i + 1] - a
            seg_len2 = d @ d
            t = float(np.clip((p - a) @ d / seg_len2, 0.0, 1.0))
            q = a + t * d
            dist = float(np.linalg.norm(p - q))
            if dist < best[0]:
                seg_len = math.sqrt(seg_len2)
                s = self._s[i] + t * seg_len
                lateral = float(_cross2(d / seg_len, p - q))
                best = (dist, s, lateral)
        return best[1], best[2]


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def _ego_frame_longitudinal(agent, ego, frame):
    pe = ego.pose_at_frame(frame)
    pa = agent.pose_at_frame(frame)
    dx, dy = pa.x - pe.x, pa.y - pe.y
    return math.cos(pe.yaw) * dx + math.sin(pe.yaw) * dy


def passes_ego(agent, ego):
    """True when the ego overtakes the agent: the agent's longitudinal
    coordinate in the ego frame goes from positive to negative."""
    shared = sorted(set(agent.frames.tolist()) & set(ego.frames.tolist()))
    seen_ahead = False
    for f in shared:
        lon = _ego_frame_longitudinal(agent, ego, f)
        if lon > 0:
            seen_ahead = True
        elif lon < 0 and seen_ahead:
            return True
    return False


def classify_agent(agent, ego, total_frames=None):
    """Assign one of the seven direction/entry labels to an agent.

    Direction comes from heading agreement with the ego at the first shared
    frame; the T-subtype from whether the agent is present at the scene start,
    which side it enters from, and whether the ego passes it.
    """
    if len(agent) < 2:
        raise ClassificationError(
            f"agent {agent.vehicle_id} has {len(agent)} poses; need at least 2"
        )
    shared = sorted(set(agent.frames.tolist()) & set(ego.frames.tolist()))
    if not shared:
        raise ClassificationError(f"agent {agent.vehicle_id} shares no frames with the ego")
    first = shared[0]
    ego_pose = ego.pose_at_frame(first)
    agent_pose = agent.pose_at_frame(first)
    same_direction = abs(normalize_yaw(agent_pose.yaw - ego_pose.yaw)) < math.pi / 2
    since_start = int(agent.frames[0]) == int(ego.frames[0])
    if same_direction:
        if since_start:
            return "D0T1"
        lon = _ego_frame_longitudinal(agent, ego, first)
        return "D0T2" if lon < 0 else "D0T3"
    passed = passes_ego(agent, ego)
    if since_start:
        return "D1T1" if passed else "D1T2"
    return "D1T3" if passed else "D1T4"


# ---------------------------------------------------------------------------
# extrapolation
# ---------------------------------------------------------------------------

@dataclass
class ExtrapolationResult:
    trajectory: Trajectory
    start_delay: float
    warnings: list = field(default_factory=list)


def _extend_along_road(traj, road, speed, sign, frame_rate, until_t, warnings):
    """Append per-frame poses following the road at constant speed."""
    if speed <= 1e-9 or traj.t[-1] >= until_t - 1e-9:
        return traj
    s, lateral = road.project(traj.positions[-1])
    frames = [int(traj.frames[-1])]
    xs, ys, yaws, ts = [], [], [], []
    departed = False
    f = int(traj.frames[-1])
    t = float(traj.t[-1])
    dt = 1.0 / frame_rate
    while t + dt <= until_t + 1e-9:
        f += 1
        t += dt
        s += sign * speed * dt
        if s < 0.0 or s > road.length:
            departed = True
        tangent = road.tangent_at(s)
        normal = np.array([-tangent[1], tangent[0]])
        base = road.point_at(s)
        if s < 0.0:
            base = road.point_at(0.0) + s * road.tangent_at(0.0)
        elif s > road.length:
            base = road.point_at(road.length) + (s - road.length) * road.tangent_at(road.length)
        p = base + lateral * normal
        xs.append(p[0])
        ys.append(p[1])
        yaws.append(math.atan2(sign * tangent[1], sign * tangent[0]))
        ts.append(t)
        frames.append(f)
    if not xs:
        return traj
    if departed:
        warnings.append(
            f"vehicle {traj.vehicle_id}: extension leaves the road span; continued straight"
        )
    return Trajectory(
        vehicle_id=traj.vehicle_id,
        frames=np.concatenate([traj.frames, np.asarray(frames[1:], dtype=np.int64)]),
        t=np.concatenate([traj.t, np.asarray(ts)]),
        x=np.concatenate([traj.x, np.asarray(xs)]),
        y=np.concatenate([traj.y, np.asarray(ys)]),
        yaw=np.concatenate([traj.yaw, np.asarray(yaws)]),
        speeds=np.concatenate([traj.speeds, np.full(len(xs), speed)]),
        category=traj.category,
    )


def _clip_outside_fov(p, ego_pose, margin=0.5):
    """Push a point out of the ego's 90-degree forward wedge if needed."""
    c, s = math.cos(ego_pose.yaw), math.sin(ego_pose.yaw)
    dx, dy = p[0] - ego_pose.x, p[1] - ego_pose.y
    fwd = c * dx + s * dy
    left = -s * dx + c * dy
    if fwd > 0 and abs(left) < fwd + margin:  # inside (or near) the wedge
        fwd = abs(left) - margin
        return np.array([ego_pose.x + c * fwd - s * left, ego_pose.y + s * fwd + c * left])
    return p


def _mimic_ego_prefix(agent, ego, frame_rate, standoff=DEFAULT_STANDOFF, blend_frames=10):
    """Back-fill an overtaking agent to the scene start: track the ego from
    `standoff` meters behind, morphing into the first observed pose."""
    first = int(agent.frames[0])
    start = int(ego.frames[0])
    if first <= start:
        return agent
    prefix_frames = [f for f in range(start, first) if f in set(ego.frames.tolist())]
    if not prefix_frames:
        return agent
    mimic = []
    for f in prefix_frames + [first]:
        pe = ego.pose_at_frame(f)
        mimic.append((pe, np.array([pe.x - standoff * math.cos(pe.yaw),
                                    pe.y - standoff * math.sin(pe.yaw)])))
    target = agent.positions[0]
    delta = target - mimic[-1][1]
    total = len(mimic)
    blend_start = max(0, total - 1 - blend_frames)
    xs, ys, ts, frs = [], [], [], []
    for i, (pe, p) in enumerate(mimic[:-1]):
        alpha = 0.0
        if i >= blend_start:
            alpha = (i - blend_start) / max(total - 1 - blend_start, 1)
        q = p + alpha * delta
        q = _clip_outside_fov(q, pe)
        xs.append(q[0])
        ys.append(q[1])
        frs.append(prefix_frames[i])
        ts.append(pe.t)
    ego_speed = {int(f): sp for f, sp in zip(ego.frames, ego.speeds)}
    speeds = [ego_speed[f] for f in frs]
    dxs = np.diff(xs + [target[0]])
    dys = np.diff(ys + [target[1]])
    yaws = [math.atan2(dy, dx) if math.hypot(dx, dy) > 1e-9 else 0.0
            for dx, dy in zip(dxs, dys)]
    return Trajectory(
        vehicle_id=agent.vehicle_id,
        frames=np.concatenate([np.asarray(frs, dtype=np.int64), agent.frames]),
        t=np.concatenate([np.asarray(ts), agent.t]),
        x=np.concatenate([np.asarray(xs), agent.x]),
        y=np.concatenate([np.asarray(ys), agent.y]),
        yaw=np.concatenate([np.asarray(yaws), agent.yaw]),
        speeds=np.concatenate([np.asarray(speeds), agent.speeds]),
        category=agent.category,
    )


def extrapolate(agent, category, road, ego, sim_duration, frame_rate,
                standoff=DEFAULT_STANDOFF):
    """Apply the per-category trajectory processing rules.

    Same-direction agents present from the start pass through unchanged over
    their observed span; overtakers are back-filled mimicking the ego; late
    entrants get a start delay; oncoming agents continue along the road at
    their last observed speed once out of scene. Every trajectory is extended
    to the simulation duration following the road.
    """
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    warnings = []
    start_delay = 0.0
    out = agent.replace(category=category)
    scene_start = int(ego.frames[0])

    if category == "D0T2":
        out = _mimic_ego_prefix(out, ego, frame_rate, standoff)
    elif category in ("D0T3", "D1T3", "D1T4"):
        start_delay = (int(agent.frames[0]) - scene_start) / frame_rate

    ego_mean = float(np.mean(ego.speeds)) if len(ego) else 0.0
    last_speed = float(out.speeds[-1]) if len(out) else 0.0
    if category.startswith("D0"):
        # agents the ego overtook keep a velocity below the ego's
        if passes_ego(agent, ego):
            extend_speed = min(last_speed, OVERTAKEN_SPEED_FACTOR * ego_mean)
        else:
            extend_speed = last_speed
        sign = 1.0
    else:
        extend_speed = last_speed
        sign = -1.0  # oncoming agents run the road backwards
    # waypoints live on the clip timeline; a start delay shifts playback,
    # so extension still ends at the clip's simulated duration
    out = _extend_along_road(out, road, extend_speed, sign, frame_rate,
                             sim_duration, warnings)
    return ExtrapolationResult(out, start_delay, warnings)


# ---------------------------------------------------------------------------
# road generation
# ---------------------------------------------------------------------------

def collision_frame(agents, ego, radius=COLLISION_RADIUS):
    """First frame where any agent comes within `radius` of the ego; the last
    ego frame when no such approach happens."""
    for f in ego.frames.tolist():
        pe = ego.pose_at_frame(f)
        for agent in agents:
            try:
                pa = agent.pose_at_frame(f)
            except Exception:
                continue
            if math.hypot(pa.x - pe.x, pa.y - pe.y) < radius:
                return int(f)
    return int(ego.frames[-1])


DEFAULT_ROAD_KNOT_SPACING = 25.0  # sparse knots realize the heavy smoothing


def _path_samples(source):
    """(N, 2) samples at road waypoint spacing from a smooth trajectory or a
    raw polyline."""
    if isinstance(source, np.ndarray) or isinstance(source, (list, tuple)):
        return np.asarray(source, dtype=np.float64).reshape(-1, 2)
    return source.resample(ROAD_SPACING)


ROAD_REFIT_TOLERANCE = 0.01  # meters; input closer than this is already smooth


def _lsq_centerline(samples, knot_spacing):
    """Least-squares cubic fit with knots every knot_spacing meters, resampled
    at the road waypoint spacing.

    Input already within ROAD_REFIT_TOLERANCE of its own fit is returned
    verbatim, so repeated application is an exact fixed point.
    """
    u = _chord_parameter(samples[:, 0], samples[:, 1])
    keep = np.concatenate([[True], np.diff(u) > 1e-9])
    u, pts = u[keep], samples[keep]
    length = u[-1]
    interior = np.arange(knot_spacing, length - 0.5 * knot_spacing, knot_spacing)
    knots = np.r_[[0.0] * 4, interior, [length] * 4]
    cx = interpolate.make_lsq_spline(u, pts[:, 0], knots, k=3)
    cy = interpolate.make_lsq_spline(u, pts[:, 1], knots, k=3)
    residual = np.hypot(cx(u) - pts[:, 0], cy(u) - pts[:, 1]).max()
    gaps = np.diff(u)
    if residual < ROAD_REFIT_TOLERANCE and gaps.min() >= 0.5 and gaps.max() <= 20.0:
        return pts
    n_out = max(2, int(round(length / ROAD_SPACING)) + 1)
    uu = np.linspace(0.0, length, n_out)
    return np.column_stack([cx(uu), cy(uu)])


def generate_road(ego_smooth, oncoming_paths=(), lane_count=2, lane_width=3.7,
                  knot_spacing=DEFAULT_ROAD_KNOT_SPACING):
    """Road centerline from the heavily smoothed ego path, optionally extended
    past the ego endpoint with the reversed, laterally recentered tail of an
    oncoming path (one continuous spline across the junction)."""
    samples = _path_samples(ego_smooth)
    ego_len = _chord_parameter(samples[:, 0], samples[:, 1])[-1]
    if ego_len < 10.0:
        raise RoadError(f"ego path too short to anchor a road ({ego_len:.1f} m)")
    base = _lsq_centerline(samples, knot_spacing)

    end = base[-1]
    end_tangent = base[-1] - base[-2]
    end_tangent = end_tangent / np.linalg.norm(end_tangent)
    end_normal = np.array([-end_tangent[1], end_tangent[0]])

    tail_pts = None
    for oncoming in oncoming_paths:
        pts = _path_samples(oncoming)[::-1]  # reverse into the road's travel direction
        along = (pts - end) @ end_tangent
        beyond = pts[along > ROAD_SPACING * 0.25]
        if beyond.shape[0] < 2:
            continue
        order = np.argsort((beyond - end) @ end_tangent)
        beyond = beyond[order]
        lateral0 = (beyond[0] - end) @ end_normal
        tail_pts = beyond - lateral0 * end_normal  # recenter onto the centerline end
        break

    if tail_pts is None:
        return RoadSpec(base, lane_count, lane_width)

    center = _lsq_centerline(np.vstack([base, tail_pts]), knot_spacing)
    return RoadSpec(center, lane_count, lane_width)


# ---------------------------------------------------------------------------
# step-back synchronization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepBackEntry:
    vehicle_id: int
    v_t: float  # target speed at first appearance
    t_s: float  # time to reach v_t from rest
    d_s: float  # distance covered while accelerating
    D_s: float  # total lead-in length including the constant-speed wait


@dataclass
class StepBackTable:
    accel: float
    t_s_max: float
    entries: dict  # vehicle_id -> StepBackEntry


def compute_stepback(targets, accel=DEFAULT_ACCEL):
    """Constant-acceleration lead-in kinematics for a fleet.

    targets maps vehicle_id -> target speed. Every vehicle accelerates from
    rest, then holds its target speed until the slowest-launching vehicle
    catches up at t_s_max, so all merge simultaneously.
    """
    if accel <= 0:
        raise ValueError(f"accel must be positive, got {accel}")
    for vid, v in targets.items():
        if v < 0:
            raise ValueError(f"vehicle {vid}: target speed {v} is negative")
    t_s = {vid: v / accel for vid, v in targets.items()}
    t_s_max = max(t_s.values(), default=0.0)
    entries = {}
    for vid, v in targets.items():
        d_s = v * v / (2.0 * accel)
        D_s = d_s + (t_s_max - t_s[vid]) * v
        entries[vid] = StepBackEntry(vid, float(v), float(t_s[vid]), float(d_s), float(D_s))
    return StepBackTable(accel=float(accel), t_s_max=float(t_s_max), entries=entries)


def build_leadin(traj, entry, t_s_max, frame_rate, accel=DEFAULT_ACCEL):
    """Straight constant-acceleration run-up ending exactly at the first pose.

    Returns:
        (waypoints (M, 2), speeds (M,)): per-frame samples over [0, t_s_max],
        the last one coinciding with the trajectory's first pose at speed v_t.
        Zero lead-in distance yields empty arrays.
    """
    if entry.D_s < 0:
        raise ValueError("lead-in distance must be non-negative")
    if entry.D_s == 0.0:
        return np.empty((0, 2)), np.empty(0)
    heading = float(traj.yaw[0])
    direction = np.array([math.cos(heading), math.sin(heading)])
    first = traj.positions[0]
    n = int(round(t_s_max * frame_rate))
    tt = np.arange(n + 1) / frame_rate
    tt[-1] = t_s_max  # exact merge time
    dist = np.where(tt <= entry.t_s,
                    0.5 * accel * tt ** 2,
                    entry.d_s + (tt - entry.t_s) * entry.v_t)
    speeds = np.where(tt <= entry.t_s, accel * tt, entry.v_t)
    waypoints = first[None, :] + (dist - entry.D_s)[:, None] * direction[None, :]
    waypoints[-1] = first  # bitwise-exact merge
    return waypoints, speeds


# ---------------------------------------------------------------------------
# scenario assembly and export
# ---------------------------------------------------------------------------

@dataclass
class VehicleSpec:
    id: int
    category: str
    start_delay: float
    lead_in: np.ndarray  # (M, 2)
    waypoints: np.ndarray  # (N, 2)
    speeds: np.ndarray  # (N,)

    def __post_init__(self):
        self.lead_in = np.asarray(self.lead_in, dtype=np.float64).reshape(-1, 2)
        self.waypoints = np.asarray(self.waypoints, dtype=np.float64).reshape(-1, 2)
        self.speeds = np.asarray(self.speeds, dtype=np.float64).reshape(-1)

    @property
    def initial_position(self):
        return self.lead_in[0] if self.lead_in.shape[0] else self.waypoints[0]


@dataclass
class ScenarioSpec:
    road: RoadSpec
    vehicles: list
    frame_rate: float
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Conflict:
    vehicle_a: int
    vehicle_b: int
    distance: float
    position: tuple  # midpoint between the two initial positions


def check_overlaps(scenario, min_gap=DEFAULT_MIN_GAP):
    """Report vehicle pairs closer than min_gap at their initial (t=0)
    positions, i.e. at the start of the lead-in."""
    if min_gap <= 0:
        raise ValueError(f"min_gap must be positive, got {min_gap}")
    conflicts = []
    vehicles = [v for v in scenario.vehicles if v.waypoints.shape[0] or v.lead_in.shape[0]]
    for i in range(len(vehicles)):
        for j in range(i + 1, len(vehicles)):
            pa = vehicles[i].initial_position
            pb = vehicles[j].initial_position
            d = float(np.linalg.norm(pa - pb))
            if d < min_gap:
                mid = tuple(0.5 * (pa + pb))
                conflicts.append(Conflict(vehicles[i].id, vehicles[j].id, d, mid))
    return conflicts


def validate_scenario(scenario):
    """Collect invariant violations; empty list means exportable."""
    violations = []
    if scenario.frame_rate <= 0:
        violations.append(f"frame_rate must be positive, got {scenario.frame_rate}")
    seen = set()
    for v in scenario.vehicles:
        if v.id in seen:
            violations.append(f"vehicle id {v.id} appears twice")
        seen.add(v.id)
        if v.start_delay < 0:
            violations.append(f"vehicle {v.id}: start_delay {v.start_delay} is negative")
        if v.category not in CATEGORIES + ("ego",):
            violations.append(f"vehicle {v.id}: unknown category {v.category!r}")
        if v.speeds.shape[0] != v.waypoints.shape[0]:
            violations.append(
                f"vehicle {v.id}: {v.speeds.shape[0]} speeds for {v.waypoints.shape[0]} waypoints"
            )
        if (v.speeds < 0).any():
            violations.append(f"vehicle {v.id}: negative speed")
        if v.lead_in.shape[0] and v.waypoints.shape[0]:
            seam = float(np.linalg.norm(v.lead_in[-1] - v.waypoints[0]))
            if seam >= SEGMENT_GAP_LIMIT:
                violations.append(
                    f"vehicle {v.id}: continuity violated, {seam:.2f} m gap "
                    f"between lead-in and waypoints (limit {SEGMENT_GAP_LIMIT} m)"
                )
    return violations


def _fmt_float(x):
    return f"{x:.6f}"


def _canonical(node, out):
    if isinstance(node, dict):
        out.append("{")
        for i, key in enumerate(sorted(node)):
            if i:
                out.append(",")
            out.append(json.dumps(key))
            out.append(":")
            _canonical(node[key], out)
        out.append("}")
    elif isinstance(node, (list, tuple)):
        out.append("[")
        for i, item in enumerate(node):
            if i:
                out.append(",")
            _canonical(item, out)
        out.append("]")
    elif isinstance(node, bool):
        out.append("true" if node else "false")
    elif isinstance(node, (int, np.integer)):
        out.append(str(int(node)))
    elif isinstance(node, (float, np.floating)):
        out.append(_fmt_float(float(node)))
    elif isinstance(node, str):
        out.append(json.dumps(node))
    elif node is None:
        out.append("null")
    else:
        raise TypeError(f"cannot serialize {type(node)}")


def canonical_json(payload):
    """Sorted keys, 6-decimal fixed-point floats: re-serialization of a parsed
    document is byte-identical."""
    out = []
    _canonical(payload, out)
    out.append("\n")
    return "".join(out).encode()


def scenario_to_dict(scenario):
    return {
        "road": {
            "centerline": [[float(x), float(y)] for x, y in scenario.road.centerline],
            "lane_count": int(scenario.road.lane_count),
            "lane_width": float(scenario.road.lane_width),
        },
        "vehicles": [
            {
                "id": int(v.id),
                "category": v.category,
                "start_delay": float(v.start_delay),
                "lead_in": [[float(x), float(y)] for x, y in v.lead_in],
                "waypoints": [[float(x), float(y)] for x, y in v.waypoints],
                "speeds": [float(s) for s in v.speeds],
            }
            for v in sorted(scenario.vehicles, key=lambda v: v.id)
        ],
        "frame_rate": float(scenario.frame_rate),
        "meta": dict(scenario.meta),
    }


def scenario_from_dict(data):
    road = RoadSpec(
        centerline=np.asarray(data["road"]["centerline"], dtype=np.float64),
        lane_count=int(data["road"]["lane_count"]),
        lane_width=float(data["road"]["lane_width"]),
    )
    vehicles = [
        VehicleSpec(
            id=int(v["id"]),
            category=str(v["category"]),
            start_delay=float(v["start_delay"]),
            lead_in=np.asarray(v["lead_in"], dtype=np.float64).reshape(-1, 2),
            waypoints=np.asarray(v["waypoints"], dtype=np.float64).reshape(-1, 2),
            speeds=np.asarray(v["speeds"], dtype=np.float64),
        )
        for v in data["vehicles"]
    ]
    meta = {str(k): str(v) for k, v in data.get("meta", {}).items()}
    spec = ScenarioSpec(road=road, vehicles=vehicles,
                        frame_rate=float(data["frame_rate"]), meta=meta)
    violations = validate_scenario(spec)
    if violations:
        raise ScenarioValidationError(violations)
    return spec


def export_scenario(scenario, path):
    """Write the scenario as canonical JSON, atomically."""
    violations = validate_scenario(scenario)
    if violations:
        raise ScenarioValidationError(violations)
    payload = canonical_json(scenario_to_dict(scenario))
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed to write scenario to {path}: {exc}") from exc
    return path


def load_scenario(path):
    try:
        with open(path, "rb") as fh:
            data = json.loads(fh.read().decode())
    except OSError as exc:
        raise OSError(f"failed to read scenario from {path}: {exc}") from exc
    return scenario_from_dict(data)
