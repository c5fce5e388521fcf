"""Pinhole camera math: depth back-projection, masked cloud extraction,
vehicle position estimates, and lane-based focal length calibration.

Camera frame convention (used everywhere in this package): x right, y down,
z forward, depth measured along z. Pixel (u, v) has u = column, v = row with
a top-left origin; lane code converts rows to a bottom-left origin before
fitting, and :class:`ImageLine` is expressed in that bottom-left convention.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels

DEFAULT_MAX_DEPTH = 120.0  # beyond monocular-depth reliability


class InvalidDepthError(ValueError):
    """Depth value is not usable (non-positive)."""


class PixelBoundsError(ValueError):
    """Pixel coordinate falls outside the image."""


class ShapeMismatchError(ValueError):
    """Grids that must share dimensions do not."""


class EmptyCloudError(ValueError):
    """Operation requires a non-empty point cloud."""


class CalibrationInfeasibleError(ValueError):
    """No positive focal length satisfies the lane-width constraint."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Focal lengths and principal point, plus the image size they refer to."""

    f_u: float
    f_v: float
    c_u: float
    c_v: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.f_u > 0 and self.f_v > 0):
            raise ValueError(f"focal lengths must be positive, got ({self.f_u}, {self.f_v})")
        if not (0 <= self.c_u < self.width):
            raise ValueError(f"principal column {self.c_u} outside [0, {self.width})")
        if not (0 <= self.c_v < self.height):
            raise ValueError(f"principal row {self.c_v} outside [0, {self.height})")


class Point3(NamedTuple):
    x: float
    y: float
    z: float


@dataclass
class DepthMap:
    """Row-major depth grid in meters; non-positive samples mark invalid pixels."""

    width: int
    height: int
    depth: np.ndarray  # shape (height, width), float64

    def __post_init__(self):
        self.depth = np.asarray(self.depth, dtype=np.float64)
        if self.depth.shape != (self.height, self.width):
            raise ShapeMismatchError(
                f"depth grid {self.depth.shape} does not match {self.height}x{self.width}"
            )
        if not np.isfinite(self.depth).all():
            raise ValueError("depth grid contains non-finite values")


@dataclass
class PixelMask:
    """Boolean membership grid; True marks a vehicle pixel."""

    width: int
    height: int
    member: np.ndarray  # shape (height, width), bool

    def __post_init__(self):
        self.member = np.asarray(self.member, dtype=bool)
        if self.member.shape != (self.height, self.width):
            raise ShapeMismatchError(
                f"mask grid {self.member.shape} does not match {self.height}x{self.width}"
            )

    @classmethod
    def full(cls, width, height, value=True):
        return cls(width, height, np.full((height, width), value, dtype=bool))


@dataclass
class PointCloud:
    """Points in the camera frame; every point lies in front of the camera."""

    points: np.ndarray  # shape (N, 3), float64

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.points.size and not np.isfinite(self.points).all():
            raise ValueError("cloud contains non-finite points")
        if self.points.size and not (self.points[:, 2] > 0).all():
            raise ValueError("cloud contains points at non-positive depth")

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class ImageLine:
    """Line u = slope * v + intercept with v counted up from the image bottom.

    The intercept is therefore the column where the line meets the bottom
    edge (v = 0). Vertical image lines have slope 0; horizontal lines are not
    representable, which matches their lack of a bottom-edge intersection.
    """

    slope: float
    intercept: float

    def u_at(self, v):
        return self.slope * v + self.intercept


def backproject_pixel(u, v, intrinsics, depth):
    """Back-project one pixel at the given depth into the camera frame."""
    if depth <= 0:
        raise InvalidDepthError(f"depth must be positive, got {depth}")
    if not (0 <= u < intrinsics.width and 0 <= v < intrinsics.height):
        raise PixelBoundsError(
            f"pixel ({u}, {v}) outside {intrinsics.width}x{intrinsics.height} image"
        )
    x = (u - intrinsics.c_u) * depth / intrinsics.f_u
    y = (v - intrinsics.c_v) * depth / intrinsics.f_v
    return Point3(x, y, float(depth))


def project_point(point, intrinsics):
    """Forward pinhole projection; inverse of :func:`backproject_pixel`."""
    if point.z <= 0:
        raise InvalidDepthError(f"cannot project point at depth {point.z}")
    u = point.x * intrinsics.f_u / point.z + intrinsics.c_u
    v = point.y * intrinsics.f_v / point.z + intrinsics.c_v
    return u, v


def backproject_masked(depth_map, mask, intrinsics, max_depth=DEFAULT_MAX_DEPTH):
    """Back-project every masked pixel with valid depth <= max_depth.

    Output order is row-major over the image; an all-filtered result is an
    empty cloud, not an error.
    """
    if (depth_map.width, depth_map.height) != (mask.width, mask.height):
        raise ShapeMismatchError(
            f"depth {depth_map.width}x{depth_map.height} vs mask {mask.width}x{mask.height}"
        )
    pts = kernels.backproject_masked(
        depth_map.depth,
        mask.member,
        float(intrinsics.f_u),
        float(intrinsics.f_v),
        float(intrinsics.c_u),
        float(intrinsics.c_v),
        float(max_depth),
    )
    return PointCloud(pts)


def estimate_position(cloud):
    """Component-wise mean of the cloud: the vehicle position proxy."""
    if len(cloud) == 0:
        raise EmptyCloudError("cannot estimate a position from an empty cloud")
    m = cloud.points.mean(axis=0)
    return Point3(float(m[0]), float(m[1]), float(m[2]))


# ---------------------------------------------------------------------------
# lane-based focal length calibration
# ---------------------------------------------------------------------------
#
# Model: flat ground at y = camera_height, zero roll/pitch, principal point
# at the image center, f_u = f_v = f. Bottom-origin row v' is image row
# v = (height-1) - v', which maps to the ground point
#     z = camera_height * f / (v - c_v)              (rows below the horizon)
#     x = (u - c_u) * camera_height / (v - c_v)
# Note x is independent of f while z scales with it, so the heading of a
# back-projected lane line (dx/dz) depends on f. The solver picks the f for
# which the two back-projected lane lines sit lane_width apart, measured
# perpendicular to the lines, at the ground depth of the image bottom row.

_F_LO = 10.0
_F_REL_TOL = 1e-6


def bottom_origin_horizon(height, c_v=None):
    """Bottom-origin row of the horizon (zero-pitch: the principal row)."""
    if c_v is None:
        c_v = height / 2.0
    return (height - 1.0) - c_v


def _ground_point(line, v_prime, f, camera_height, c_u, height):
    denom = bottom_origin_horizon(height) - v_prime
    z = camera_height * f / denom
    x = (line.u_at(v_prime) - c_u) * camera_height / denom
    return x, z


def _point_to_line(px, pz, ax, az, bx, bz):
    dx, dz = bx - ax, bz - az
    norm = np.hypot(dx, dz)
    return abs((px - ax) * dz - (pz - az) * dx) / norm


def _ground_separation(left, right, f, camera_height, width, height):
    """Perpendicular lane separation on the ground at the bottom row's depth."""
    c_u = width / 2.0
    v_hi = bottom_origin_horizon(height) / 2.0  # halfway to the horizon
    lx0, lz0 = _ground_point(left, 0.0, f, camera_height, c_u, height)
    lx1, lz1 = _ground_point(left, v_hi, f, camera_height, c_u, height)
    rx0, rz0 = _ground_point(right, 0.0, f, camera_height, c_u, height)
    rx1, rz1 = _ground_point(right, v_hi, f, camera_height, c_u, height)
    d_lr = _point_to_line(lx0, lz0, rx0, rz0, rx1, rz1)
    d_rl = _point_to_line(rx0, rz0, lx0, lz0, lx1, lz1)
    return 0.5 * (d_lr + d_rl)


def calibrate_from_lanes(left_line, right_line, lane_width, camera_height, width, height):
    """Recover equal focal lengths from two lane lines of known real width.

    Bisects f over [10, 10 * width] pixels until the back-projected lines are
    lane_width apart (1e-6 relative). Raises CalibrationInfeasibleError when
    no positive focal length satisfies the constraint; callers then fall back
    to configured dataset intrinsics.
    """
    if lane_width <= 0 or camera_height <= 0:
        raise ValueError("lane_width and camera_height must be positive")
    du_bottom = right_line.intercept - left_line.intercept
    if du_bottom <= 0:
        raise CalibrationInfeasibleError(
            "lane lines do not straddle the image bottom edge left-to-right"
        )

    def sep(f):
        return _ground_separation(left_line, right_line, f, camera_height, width, height)

    lo, hi = _F_LO, 10.0 * width
    s_lo, s_hi = sep(lo), sep(hi)
    if not (min(s_lo, s_hi) <= lane_width <= max(s_lo, s_hi)):
        raise CalibrationInfeasibleError(
            f"no focal length in [{lo}, {hi}] px yields a {lane_width} m lane "
            f"(separation range [{min(s_lo, s_hi):.3f}, {max(s_lo, s_hi):.3f}] m)"
        )
    increasing = s_hi >= s_lo
    while (hi - lo) > _F_REL_TOL * (0.5 * (hi + lo)):
        mid = 0.5 * (lo + hi)
        if (sep(mid) < lane_width) == increasing:
            lo = mid
        else:
            hi = mid
    f = 0.5 * (lo + hi)
    return CameraIntrinsics(f, f, width / 2.0, height / 2.0, width, height)


def render_ground_line(f, width, height, camera_height, lateral_offset, heading_slope=0.0):
    """Project the ground line x(z) = lateral_offset + heading_slope * z into
    the image; the forward model that calibrate_from_lanes inverts."""
    c_u = width / 2.0
    # u(v') = c_u + heading_slope*f + (lateral_offset/camera_height) * (horizon - v')
    slope = -lateral_offset / camera_height
    intercept = c_u + heading_slope * f + \
        (lateral_offset / camera_height) * bottom_origin_horizon(height)
    return ImageLine(slope, intercept)
