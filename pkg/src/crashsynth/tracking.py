"""Identity maintenance across frames: IOU costs, optimal assignment, and
threshold-gated track birth and death over file-provided detections."""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels

DEFAULT_IOU_THRESHOLD = 0.3
DEFAULT_BIRTH_HITS = 3
DEFAULT_DEATH_MISSES = 5


@dataclass(frozen=True)
class BBox2D:
    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError(f"degenerate box {self}")

    @property
    def area(self):
        return (self.u_max - self.u_min) * (self.v_max - self.v_min)

    def as_array(self):
        return np.array([self.u_min, self.v_min, self.u_max, self.v_max], dtype=np.float64)


@dataclass(frozen=True)
class Detection:
    frame: int
    bbox: BBox2D
    score: float = 1.0
    mask_file: Optional[str] = None
    cls: str = "car"

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score {self.score} outside [0, 1]")


class TrackState(enum.Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"
    DEAD = "dead"


@dataclass
class Track:
    id: int
    state: TrackState = TrackState.TENTATIVE
    hits: int = 0
    misses: int = 0
    history: dict = field(default_factory=dict)  # frame -> Detection

    @property
    def last_detection(self):
        return self.history[max(self.history)]

    def record(self, detection):
        if self.history and detection.frame <= max(self.history):
            raise ValueError(
                f"track {self.id}: frame {detection.frame} not after {max(self.history)}"
            )
        self.history[detection.frame] = detection


@dataclass(frozen=True)
class Assignment:
    pairs: tuple  # ((row, col), ...)
    total_cost: float


def iou(a, b):
    """Intersection over union of two boxes; 0 when disjoint, 1 iff identical."""
    iw = min(a.u_max, b.u_max) - max(a.u_min, b.u_min)
    ih = min(a.v_max, b.v_max) - max(a.v_min, b.v_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def solve_assignment(cost):
    """Minimum-total-cost one-to-one assignment covering min(rows, cols) pairs.

    Rectangular matrices are padded square with a large finite cost
    (10x the max absolute entry + 1) and pad pairs discarded; cost ties are
    broken toward the lexicographically lowest (row, column) pairs.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.size == 0:
        return Assignment((), 0.0)
    if cost.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {cost.shape}")
    if not np.isfinite(cost).all():
        raise ValueError("cost matrix entries must be finite")
    n_rows, n_cols = cost.shape
    n = max(n_rows, n_cols)
    if n_rows == n_cols:
        square = cost
    else:
        pad = 10.0 * float(np.abs(cost).max()) + 1.0
        square = np.full((n, n), pad, dtype=np.float64)
        square[:n_rows, :n_cols] = cost
    row_to_col = kernels.lexmin_assignment(square)
    pairs = []
    total = 0.0
    for r in range(n_rows):
        c = int(row_to_col[r])
        if c < n_cols:
            pairs.append((r, c))
            total += float(cost[r, c])
    return Assignment(tuple(pairs), total)


def associate_frame(track_boxes, detection_boxes, iou_threshold=DEFAULT_IOU_THRESHOLD):
    """Match track boxes to detection boxes on 1 - IOU cost.

    Matched pairs whose IOU falls below the threshold are demoted to
    unmatched on both sides.

    Returns:
        (matches, unmatched_tracks, unmatched_detections) index lists.
    """
    if not track_boxes or not detection_boxes:
        return [], list(range(len(track_boxes))), list(range(len(detection_boxes)))
    ta = np.stack([b.as_array() for b in track_boxes])
    da = np.stack([b.as_array() for b in detection_boxes])
    ious = kernels.iou_matrix(ta, da)
    assignment = solve_assignment(1.0 - ious)
    matches = []
    matched_t, matched_d = set(), set()
    for (r, c) in assignment.pairs:
        if ious[r, c] >= iou_threshold:
            matches.append((r, c))
            matched_t.add(r)
            matched_d.add(c)
    unmatched_tracks = [i for i in range(len(track_boxes)) if i not in matched_t]
    unmatched_dets = [j for j in range(len(detection_boxes)) if j not in matched_d]
    return matches, unmatched_tracks, unmatched_dets


class TrackSet:
    """Single-writer track registry; ids increase monotonically, never reused."""

    def __init__(self, birth_hits=DEFAULT_BIRTH_HITS, death_misses=DEFAULT_DEATH_MISSES,
                 iou_threshold=DEFAULT_IOU_THRESHOLD):
        if birth_hits < 1 or death_misses < 1:
            raise ValueError("birth_hits and death_misses must be >= 1")
        self.birth_hits = birth_hits
        self.death_misses = death_misses
        self.iou_threshold = iou_threshold
        self.tracks = {}
        self._next_id = 1

    @property
    def alive(self):
        """Tracks eligible for matching, in id order."""
        return [t for t in sorted(self.tracks.values(), key=lambda t: t.id)
                if t.state not in (TrackState.DEAD,)]

    def step(self, frame, detections):
        """Associate one frame of detections and advance every lifecycle."""
        alive = self.alive
        track_boxes = [t.last_detection.bbox for t in alive]
        det_boxes = [d.bbox for d in detections]
        matches, unmatched_t, unmatched_d = associate_frame(
            track_boxes, det_boxes, self.iou_threshold
        )
        result = FrameResult(
            matches=[(alive[ti].id, detections[di]) for ti, di in matches],
            unmatched_track_ids=[alive[ti].id for ti in unmatched_t],
            unmatched_detections=[detections[di] for di in unmatched_d],
        )
        step_lifecycle(self, result, frame)
        return result


@dataclass
class FrameResult:
    matches: list  # (track_id, Detection)
    unmatched_track_ids: list
    unmatched_detections: list


def step_lifecycle(track_set, frame_result, frame):
    """Advance birth/death counters for one associated frame.

    A match increments hits and resets misses; a tentative track reaching
    birth_hits becomes active. A miss increments misses and resets hits;
    reaching death_misses kills the track, and a tentative track dies on its
    first miss. Each unmatched detection spawns a fresh tentative track.
    """
    for track_id, detection in frame_result.matches:
        track = track_set.tracks[track_id]
        track.record(detection)
        track.hits += 1
        track.misses = 0
        if track.state is TrackState.TENTATIVE:
            if track.hits >= track_set.birth_hits:
                track.state = TrackState.ACTIVE
        elif track.state is TrackState.LOST:
            track.state = TrackState.ACTIVE
    for track_id in frame_result.unmatched_track_ids:
        track = track_set.tracks[track_id]
        track.misses += 1
        track.hits = 0
        if track.state is TrackState.TENTATIVE:
            track.state = TrackState.DEAD  # ghost births die on first miss
        elif track.misses >= track_set.death_misses:
            track.state = TrackState.DEAD
        else:
            track.state = TrackState.LOST
    for detection in frame_result.unmatched_detections:
        track = Track(id=track_set._next_id)
        track_set._next_id += 1
        track.record(detection)
        track.hits = 1
        if track_set.birth_hits <= 1:
            track.state = TrackState.ACTIVE
        track_set.tracks[track.id] = track
    return track_set
