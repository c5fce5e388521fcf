"""Lane-pixel clustering, straight-line fitting, persistent lane identities,
and the ego's lateral position between lane-line x-intercepts.

All lane math runs in bottom-left-origin pixel coordinates: row v = 0 is the
image bottom, so a line's x-intercept is the column where it meets the bottom
edge. Incoming top-left-origin pixels are converted once at ingestion.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .camera_geometry import ImageLine
from .tracking import solve_assignment

DEFAULT_EPS = 15.0
DEFAULT_MIN_PTS = 20
DEFAULT_MAX_COST = 50.0
DEFAULT_SURVIVAL_FRAMES = 5
DEFAULT_LANE_WIDTH = 3.7  # US interstate standard
LOWER_ROWS_FRACTION = 0.4  # only rows near the ego feed clustering


class FitError(ValueError):
    """Cluster cannot support a line fit (all points coincident)."""


class NoInterceptError(ValueError):
    """Fitted line is too close to horizontal to meet the bottom edge."""


class DegenerateLaneError(ValueError):
    """Lane boundaries coincide; no lateral position can be derived."""


@dataclass
class LaneObservation:
    frame: int
    pixels: np.ndarray  # (N, 2) float64, bottom-left origin (u, v)
    line: ImageLine
    x_intercept: float
    lane_id: int = -1  # assigned by the tracker


@dataclass(frozen=True)
class LateralFix:
    frame: int
    offset_in_lane: float  # meters from the left boundary of the ego lane
    lane_width_px: float
    ego_lane_id: int


def to_bottom_left(pixels, height):
    """Convert (u, v) pixels from top-left to bottom-left row origin."""
    pts = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    out = pts.copy()
    out[:, 1] = (height - 1) - pts[:, 1]
    return out


def lower_band(pixels, height, fraction=LOWER_ROWS_FRACTION):
    """Keep only the bottom `fraction` of image rows (bottom-left coords)."""
    pts = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    return pts[pts[:, 1] < fraction * height]


def cluster_lane_pixels(pixels, eps=DEFAULT_EPS, min_pts=DEFAULT_MIN_PTS):
    """DBSCAN partition of lane pixels under euclidean distance.

    Returns:
        (clusters, noise): clusters is a list of (N_i, 2) arrays ordered by
        first point index; noise collects the unassigned points.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if min_pts < 1:
        raise ValueError(f"min_pts must be >= 1, got {min_pts}")
    pts = np.asarray(pixels, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        return [], pts
    labels = kernels.dbscan_labels(pts, float(eps), int(min_pts))
    clusters = [pts[labels == cid] for cid in range(labels.max() + 1)] if labels.max() >= 0 else []
    noise = pts[labels == -1]
    return clusters, noise


def fit_lane_line(cluster, image_width=None):
    """Total-least-squares line through a pixel cluster.

    Returns:
        (slope, intercept, x_intercept) for u = slope * v + intercept.

    Raises:
        FitError: all points coincident.
        NoInterceptError: line is horizontal enough that its bottom-edge
            crossing lands beyond 10x the image width.
    """
    pts = np.asarray(cluster, dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] < 2:
        raise FitError(f"need at least 2 points, got {pts.shape[0]}")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered
    if cov.trace() < 1e-12:
        raise FitError("all cluster points coincide")
    _, vecs = np.linalg.eigh(cov)
    du, dv = vecs[:, -1]  # principal direction
    bound = 10.0 * (image_width if image_width is not None else pts[:, 0].max() + 1.0)
    if abs(dv) < 1e-12:
        raise NoInterceptError("line is horizontal: no bottom-edge crossing")
    slope = du / dv
    intercept = centroid[0] - slope * centroid[1]
    if abs(intercept) > bound:
        raise NoInterceptError(
            f"bottom-edge crossing {intercept:.1f} px lies beyond 10x image width"
        )
    return float(slope), float(intercept), float(intercept)


def directed_hausdorff(a, b):
    """max over p in a of min over q in b of ||p - q|| (asymmetric)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("directed Hausdorff distance needs non-empty point sets")
    return float(kernels.directed_hausdorff_points(a, b))


def associate_lanes(previous, current, max_cost=DEFAULT_MAX_COST, next_id=0):
    """Assign persistent ids to new lane observations.

    Costs are directed Hausdorff distances from each current observation's
    pixels to each tracked lane's pixels; assigned pairs above max_cost are
    rejected and rejected observations receive fresh ids.

    Args:
        previous: {lane_id: (N, 2) pixel array} for currently tracked lanes.
        current: list of (N, 2) pixel arrays, one per new observation.
        next_id: first id to hand out for unmatched observations.

    Returns:
        (mapping, next_id): mapping[i] is the lane id for current[i].
    """
    prev_ids = sorted(previous)
    mapping = {}
    if prev_ids and current:
        cost = np.empty((len(current), len(prev_ids)))
        for i, obs in enumerate(current):
            for j, pid in enumerate(prev_ids):
                cost[i, j] = directed_hausdorff(obs, previous[pid])
        assignment = solve_assignment(cost)
        for (i, j) in assignment.pairs:
            if cost[i, j] <= max_cost:
                mapping[i] = prev_ids[j]
    for i in range(len(current)):
        if i not in mapping:
            mapping[i] = next_id
            next_id += 1
    return mapping, next_id


class LaneTracker:
    """Carries lane identities across frames; lanes unseen for longer than
    `survival_frames` frames drop out of the association pool."""

    def __init__(self, max_cost=DEFAULT_MAX_COST, survival_frames=DEFAULT_SURVIVAL_FRAMES,
                 eps=DEFAULT_EPS, min_pts=DEFAULT_MIN_PTS):
        self.max_cost = max_cost
        self.survival_frames = survival_frames
        self.eps = eps
        self.min_pts = min_pts
        self._lanes = {}  # lane_id -> (last_seen_frame, pixels)
        self._next_id = 0

    def observe(self, frame, pixels, image_width=None):
        """Cluster one frame of lane pixels and return LaneObservations with
        persistent ids, sorted by x-intercept."""
        clusters, _ = cluster_lane_pixels(pixels, self.eps, self.min_pts)
        observations = []
        kept = []
        for cl in clusters:
            try:
                slope, intercept, x_int = fit_lane_line(cl, image_width)
            except (FitError, NoInterceptError):
                continue
            observations.append(
                LaneObservation(frame, cl, ImageLine(slope, intercept), x_int)
            )
            kept.append(cl)
        pool = {
            lane_id: pix
            for lane_id, (seen, pix) in self._lanes.items()
            if frame - seen <= self.survival_frames
        }
        mapping, self._next_id = associate_lanes(pool, kept, self.max_cost, self._next_id)
        for i, obs in enumerate(observations):
            obs.lane_id = mapping[i]
            self._lanes[obs.lane_id] = (frame, obs.pixels)
        observations.sort(key=lambda o: o.x_intercept)
        return observations


def lateral_offset(ego_ref_u, left_intercept, right_intercept,
                   lane_width=DEFAULT_LANE_WIDTH, frame=0, ego_lane_id=-1):
    """Ego's metric offset from its lane's left boundary.

    Pixel distance between x-intercepts is proportional to metric lane width,
    so the offset interpolates linearly between the boundary intercepts.
    """
    if left_intercept > right_intercept:
        raise ValueError("left intercept must not exceed right intercept")
    width_px = right_intercept - left_intercept
    if width_px < 1e-9:
        raise DegenerateLaneError("lane boundary intercepts coincide")
    offset = (ego_ref_u - left_intercept) / width_px * lane_width
    return LateralFix(frame, float(offset), float(width_px), ego_lane_id)


def ego_lane_fix(observations, ego_ref_u, lane_width=DEFAULT_LANE_WIDTH, frame=0):
    """Pick the boundary pair straddling the ego column and compute its fix.

    Returns None when fewer than two intercepts exist or none straddle the
    ego reference column.
    """
    intercepts = sorted((o.x_intercept, o.lane_id) for o in observations)
    for (lx, lid), (rx, _rid) in zip(intercepts, intercepts[1:]):
        if lx <= ego_ref_u <= rx:
            return lateral_offset(ego_ref_u, lx, rx, lane_width, frame, lid)
    return None
