"""World-frame trajectory assembly and smoothing.

World frame: x points along the ego's initial forward direction, y to its
left, origin at the first ego pose. Camera-frame observations (x right,
y down, z forward) map into it as forward = z, left = -x.
"""

import math
import warnings as _warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import interpolate


def _fit_quietly(fit, *args, **kwargs):
    # fitpack warns when a tiny smoothing budget is unattainable; the
    # returned near-interpolating spline is exactly what we want then
    with _warnings.catch_warnings():
        _warnings.filterwarnings("ignore", message=".*theoretically impossible.*")
        return fit(*args, **kwargs)

DEFAULT_SG_WINDOW = 11
DEFAULT_SG_POLYORDER = 3
DEFAULT_LOCAL_WINDOW = 25
DEFAULT_LOCAL_SMOOTHNESS = 5.0
DEFAULT_GLOBAL_SMOOTHNESS = 0.5
MAX_FILL_GAP = 5  # frames; longer observation gaps split the track


class GapError(ValueError):
    """Required frames are missing from a pose source."""


class FrameMismatchError(ValueError):
    """Observation references a frame with no ego pose."""


def normalize_yaw(yaw):
    """Wrap angles to (-pi, pi]."""
    wrapped = np.mod(np.asarray(yaw, dtype=np.float64) + np.pi, 2.0 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return wrapped if wrapped.ndim else float(wrapped)


@dataclass(frozen=True)
class Pose2D:
    t: float
    x: float
    y: float
    yaw: float


@dataclass
class Trajectory:
    """Time-stamped world-frame poses plus a speed profile for one vehicle."""

    vehicle_id: int
    frames: np.ndarray
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    yaw: np.ndarray
    speeds: np.ndarray
    category: Optional[str] = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.int64)
        for name in ("t", "x", "y", "yaw", "speeds"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        n = self.t.size
        if not all(getattr(self, name).size == n for name in ("frames", "x", "y", "yaw", "speeds")):
            raise ValueError("trajectory arrays must share one length")
        if n > 1 and not (np.diff(self.t) > 0).all():
            raise ValueError("pose times must be strictly increasing")
        if n and (self.speeds < 0).any():
            raise ValueError("speeds must be non-negative")
        self.yaw = normalize_yaw(self.yaw) if n else self.yaw

    def __len__(self):
        return self.t.size

    @property
    def positions(self):
        return np.column_stack([self.x, self.y])

    def poses(self):
        return [Pose2D(*row) for row in zip(self.t, self.x, self.y, self.yaw)]

    def pose_at_frame(self, frame):
        idx = np.searchsorted(self.frames, frame)
        if idx >= len(self) or self.frames[idx] != frame:
            raise FrameMismatchError(f"no pose at frame {frame}")
        return Pose2D(self.t[idx], self.x[idx], self.y[idx], self.yaw[idx])

    def replace(self, **kwargs):
        data = {
            "vehicle_id": self.vehicle_id,
            "frames": self.frames,
            "t": self.t,
            "x": self.x,
            "y": self.y,
            "yaw": self.yaw,
            "speeds": self.speeds,
            "category": self.category,
        }
        data.update(kwargs)
        return Trajectory(**data)


def ego_trajectory(mode, odometry=None, speed=0.0, frame_count=0, frame_rate=10.0):
    """Build the ego trajectory.

    constant_straight assigns a linear path at constant speed along +x;
    from_odometry passes file poses through, re-timed by the frame rate.
    """
    if frame_rate <= 0:
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    if mode == "constant_straight":
        if speed < 0:
            raise ValueError(f"speed must be non-negative, got {speed}")
        k = np.arange(frame_count)
        return Trajectory(
            vehicle_id=0,
            frames=k,
            t=k / frame_rate,
            x=k * speed / frame_rate,
            y=np.zeros(frame_count),
            yaw=np.zeros(frame_count),
            speeds=np.full(frame_count, float(speed)),
        )
    if mode == "from_odometry":
        if odometry is None:
            raise ValueError("from_odometry mode needs odometry records")
        by_frame = {int(rec[0]): rec[1:] for rec in odometry}
        missing = [f for f in range(frame_count) if f not in by_frame]
        if missing:
            raise GapError(f"odometry missing frames {missing}")
        k = np.arange(frame_count)
        xs = np.array([by_frame[f][0] for f in range(frame_count)], dtype=np.float64)
        ys = np.array([by_frame[f][1] for f in range(frame_count)], dtype=np.float64)
        yaws = np.array([by_frame[f][2] for f in range(frame_count)], dtype=np.float64)
        traj = Trajectory(0, k, k / frame_rate, xs, ys, yaws, np.zeros(frame_count))
        if frame_count >= 2:
            traj.speeds = estimate_speeds(traj, frame_rate)
        return traj
    raise ValueError(f"unknown ego mode {mode!r}")


def apply_lane_correction(ego, fixes, lane_width):
    """Replace the ego's lateral coordinate with lane-derived positions.

    The ego lane's left boundary is anchored in world y at the first fixed
    frame; each fix then pins y = boundary - offset. Unfixed frames between
    fixes interpolate linearly; frames outside the fixed span hold the nearest
    fixed value. When a fix's lane id changes, the boundary re-anchors so the
    corrected y stays continuous. Longitudinal coordinates are untouched.

    Returns:
        (corrected trajectory, warnings)
    """
    fixes = sorted(fixes, key=lambda f: f.frame)
    if not fixes:
        return ego, ["lane correction skipped: no lateral fixes"]
    warnings = []
    in_span = [f for f in fixes if ego.frames[0] <= f.frame <= ego.frames[-1]]
    if len(in_span) < len(fixes):
        warnings.append(f"{len(fixes) - len(in_span)} lateral fixes outside trajectory span")
    if not in_span:
        return ego, warnings + ["lane correction skipped: no fixes in span"]

    frame_to_idx = {int(f): i for i, f in enumerate(ego.frames)}
    fixed_idx = []
    fixed_y = []
    anchor = None
    prev_lane = None
    prev_y = None
    for fix in in_span:
        if fix.frame not in frame_to_idx:
            warnings.append(f"lateral fix at frame {fix.frame} has no ego pose; dropped")
            continue
        i = frame_to_idx[fix.frame]
        if anchor is None:
            anchor = ego.y[i] + fix.offset_in_lane
        elif fix.ego_lane_id != prev_lane:
            anchor = prev_y + fix.offset_in_lane  # lane change: keep y continuous
        y = anchor - fix.offset_in_lane
        fixed_idx.append(i)
        fixed_y.append(y)
        prev_lane = fix.ego_lane_id
        prev_y = y
    if not fixed_idx:
        return ego, warnings + ["lane correction skipped: no usable fixes"]

    new_y = ego.y.copy()
    fixed_idx = np.asarray(fixed_idx)
    fixed_y = np.asarray(fixed_y)
    lo, hi = fixed_idx[0], fixed_idx[-1]
    new_y[lo:hi + 1] = np.interp(np.arange(lo, hi + 1), fixed_idx, fixed_y)
    new_y[:lo] = fixed_y[0]
    new_y[hi + 1:] = fixed_y[-1]
    return ego.replace(y=new_y), warnings


def compose_agent_trajectory(ego, relative, vehicle_id):
    """Compose per-frame camera-frame positions with ego poses.

    relative maps frame -> Point3 in the camera frame. World position is
    ego + R(yaw) @ (z_rel, -x_rel); frames without an observation are simply
    absent from the result.
    """
    frames = sorted(relative)
    ego_frames = set(int(f) for f in ego.frames)
    missing = [f for f in frames if f not in ego_frames]
    if missing:
        raise FrameMismatchError(f"observations at frames {missing} have no ego pose")
    xs, ys, ts = [], [], []
    for f in frames:
        pose = ego.pose_at_frame(f)
        rel = relative[f]
        fwd, left = rel.z, -rel.x
        c, s = math.cos(pose.yaw), math.sin(pose.yaw)
        xs.append(pose.x + c * fwd - s * left)
        ys.append(pose.y + s * fwd + c * left)
        ts.append(pose.t)
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    yaws = _tangent_headings(xs, ys)
    return Trajectory(
        vehicle_id=vehicle_id,
        frames=np.asarray(frames, dtype=np.int64),
        t=np.asarray(ts),
        x=xs,
        y=ys,
        yaw=yaws,
        speeds=np.zeros(len(frames)),
    )


def _tangent_headings(xs, ys):
    """Heading from the local direction of motion; holds the last heading
    through stationary stretches."""
    n = xs.size
    yaws = np.zeros(n)
    if n < 2:
        return yaws
    dx = np.gradient(xs)
    dy = np.gradient(ys)
    heading = 0.0
    for i in range(n):
        if math.hypot(dx[i], dy[i]) > 1e-9:
            heading = math.atan2(dy[i], dx[i])
        yaws[i] = heading
    return normalize_yaw(yaws)


# ---------------------------------------------------------------------------
# smoothing
# ---------------------------------------------------------------------------

def _sg_weights(offsets, degree):
    """Least-squares weights evaluating the fitted polynomial at offset 0."""
    v = np.vander(offsets, degree + 1, increasing=True)
    # first row of pinv(v) gives the constant coefficient = value at 0
    return np.linalg.pinv(v)[0]


def savitzky_golay(series, window=DEFAULT_SG_WINDOW, polyorder=DEFAULT_SG_POLYORDER):
    """Per-point least-squares polynomial smoothing.

    Interior points use the full centered window; edge points refit on the
    truncated one-sided window, with the degree clamped to the points
    available. Output length equals input length.
    """
    series = np.asarray(series, dtype=np.float64)
    if window % 2 != 1:
        raise ValueError(f"window must be odd, got {window}")
    if window <= polyorder:
        raise ValueError(f"window {window} must exceed polyorder {polyorder}")
    n = series.size
    if n < window:
        raise ValueError(f"series length {n} shorter than window {window}")
    half = window // 2
    center = _sg_weights(np.arange(-half, half + 1), polyorder)
    out = np.convolve(series, center[::-1], mode="same")
    for i in range(half):
        # truncated left window [0, i+half]
        offs = np.arange(-i, half + 1)
        deg = min(polyorder, offs.size - 1)
        out[i] = _sg_weights(offs, deg) @ series[: i + half + 1]
        # truncated right window [n-1-i-half, n-1]
        j = n - 1 - i
        offs = np.arange(-half, i + 1)
        deg = min(polyorder, offs.size - 1)
        out[j] = _sg_weights(offs, deg) @ series[j - half:]
    return out


@dataclass
class SmoothTrajectory:
    """Cubic B-spline over (x, y), parameterized by cumulative chord length
    (metric, coinciding with arc length up to spline deviation)."""

    tck: tuple
    u_start: float
    u_end: float
    source: int
    pose_u: Optional[np.ndarray] = None  # parameter of each input pose

    @property
    def knots(self):
        return self.tck[0]

    @property
    def control_points(self):
        return np.column_stack([self.tck[1][0], self.tck[1][1]])

    @property
    def length(self):
        return self.u_end - self.u_start

    def position(self, u):
        x, y = interpolate.splev(np.clip(u, self.u_start, self.u_end), self.tck)
        return np.column_stack([np.atleast_1d(x), np.atleast_1d(y)])

    def tangent(self, u):
        dx, dy = interpolate.splev(np.clip(u, self.u_start, self.u_end), self.tck, der=1)
        t = np.column_stack([np.atleast_1d(dx), np.atleast_1d(dy)])
        norms = np.linalg.norm(t, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        return t / norms

    def resample(self, spacing):
        m = max(2, int(round(self.length / spacing)) + 1)
        u = np.linspace(self.u_start, self.u_end, m)
        return self.position(u)


def _chord_parameter(x, y):
    return np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(x), np.diff(y)))])


def _noise_sigma(y):
    """Robust per-sample noise scale from second differences.

    The median makes a short sharp maneuver (a few outlier samples) invisible
    to the estimate, so such moves are treated as signal, not noise.
    """
    d2 = np.diff(np.asarray(y, dtype=np.float64), n=2)
    if d2.size == 0:
        return 0.0
    return float(np.median(np.abs(d2)) / (0.6745 * np.sqrt(6.0)))


def _greville(t, k):
    n_coef = t.size - k - 1
    return np.array([t[i + 1: i + k + 1].mean() for i in range(n_coef)])


def _pin_endpoints(tck, u0, u1, p0, p1):
    """Add the linear correction that restores the exact endpoints; linear
    functions are reproduced exactly by the B-spline basis, so smoothness is
    unchanged."""
    t, c, k = tck
    cur0 = np.array(interpolate.splev(u0, tck))
    cur1 = np.array(interpolate.splev(u1, tck))
    d0 = p0 - cur0
    d1 = p1 - cur1
    g = _greville(t, k)
    span = max(u1 - u0, 1e-12)
    w = np.clip((g - u0) / span, 0.0, 1.0)
    cx = c[0] + d0[0] * (1 - w) + d1[0] * w
    cy = c[1] + d0[1] * (1 - w) + d1[1] * w
    return (t, [cx, cy], k)


def smooth_two_level(traj, local_window=DEFAULT_LOCAL_WINDOW,
                     local_smoothness=DEFAULT_LOCAL_SMOOTHNESS,
                     global_smoothness=DEFAULT_GLOBAL_SMOOTHNESS):
    """Windowed high-smoothness spline pass, then one global low-smoothness
    fit: smooths broadly while keeping short sharp maneuvers.

    Smoothness factors are multipliers on the estimated noise variance (the
    usual choice s = m * sigma^2 for smoothing splines): a window's residual
    budget is local_smoothness * m * sigma^2 with sigma estimated robustly per
    window, so noise-free sharp swerves cost the fit almost nothing and
    survive, while broadband noise is spent freely.

    Returns:
        (SmoothTrajectory, warnings)
    """
    if local_smoothness <= global_smoothness or global_smoothness < 0:
        raise ValueError("need local_smoothness > global_smoothness >= 0")
    n = len(traj)
    if n < 4:
        raise ValueError(f"need at least 4 poses to fit a spline, got {n}")
    warnings = []
    x, y = traj.x, traj.y

    if n < local_window:
        warnings.append(
            f"{n} poses < local window {local_window}: falling back to the global fit"
        )
        sx, sy = x, y
    else:
        idx = np.arange(n, dtype=np.float64)
        step = max(1, local_window // 2)
        starts = list(range(0, n - local_window + 1, step))
        if starts[-1] != n - local_window:
            starts.append(n - local_window)
        acc_x = np.zeros(n)
        acc_y = np.zeros(n)
        acc_w = np.zeros(n)
        for s in starts:
            sl = slice(s, s + local_window)
            budget_x = local_smoothness * local_window * _noise_sigma(x[sl]) ** 2
            budget_y = local_smoothness * local_window * _noise_sigma(y[sl]) ** 2
            tx = _fit_quietly(interpolate.splrep, idx[sl], x[sl], k=3, s=budget_x)
            ty = _fit_quietly(interpolate.splrep, idx[sl], y[sl], k=3, s=budget_y)
            wx = interpolate.splev(idx[sl], tx)
            wy = interpolate.splev(idx[sl], ty)
            # triangular weights give a linear cross-fade over the overlap
            w = np.minimum(np.arange(1, local_window + 1), np.arange(local_window, 0, -1))
            acc_x[sl] += wx * w
            acc_y[sl] += wy * w
            acc_w[sl] += w
        sx = acc_x / acc_w
        sy = acc_y / acc_w

    u = _chord_parameter(sx, sy)
    keep = np.concatenate([[True], np.diff(u) > 1e-12])
    ux, vx, vy = u[keep], sx[keep], sy[keep]
    if ux.size < 4:
        raise ValueError("trajectory collapses to fewer than 4 distinct points")
    sigma2 = max(_noise_sigma(vx) ** 2, _noise_sigma(vy) ** 2)
    tck, _ = _fit_quietly(interpolate.splprep, [vx, vy], u=ux,
                          s=global_smoothness * ux.size * sigma2, k=3)
    tck = _pin_endpoints(tck, ux[0], ux[-1], np.array([x[0], y[0]]), np.array([x[-1], y[-1]]))
    return SmoothTrajectory(tck=tck, u_start=float(ux[0]), u_end=float(ux[-1]),
                            source=traj.vehicle_id, pose_u=u), warnings


def estimate_speeds(traj, frame_rate):
    """Speed magnitudes from central differences of position over time
    (one-sided at the ends)."""
    if frame_rate <= 0:
        raise ValueError(f"frame_rate must be positive, got {frame_rate}")
    n = len(traj)
    if n < 2:
        raise ValueError("need at least 2 poses to estimate speeds")
    tt = traj.frames / float(frame_rate)
    pos = traj.positions
    speeds = np.empty(n)
    speeds[0] = np.linalg.norm(pos[1] - pos[0]) / (tt[1] - tt[0])
    speeds[-1] = np.linalg.norm(pos[-1] - pos[-2]) / (tt[-1] - tt[-2])
    if n > 2:
        d = np.linalg.norm(pos[2:] - pos[:-2], axis=1)
        speeds[1:-1] = d / (tt[2:] - tt[:-2])
    return speeds


def split_and_fill(frames, xs, ys, max_gap=MAX_FILL_GAP):
    """Close observation gaps shorter than max_gap frames by linear
    interpolation; longer gaps split the sequence into segments.

    Returns:
        list of (frames, xs, ys) with consecutive integer frames.
    """
    frames = np.asarray(frames, dtype=np.int64)
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if frames.size == 0:
        return []
    segments = []
    start = 0
    for i in range(1, frames.size):
        missing = frames[i] - frames[i - 1] - 1
        if missing >= max_gap:
            segments.append((frames[start:i], xs[start:i], ys[start:i]))
            start = i
    segments.append((frames[start:], xs[start:], ys[start:]))
    filled = []
    for fr, fx, fy in segments:
        full = np.arange(fr[0], fr[-1] + 1)
        filled.append((full, np.interp(full, fr, fx), np.interp(full, fr, fy)))
    return filled
