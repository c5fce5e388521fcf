"""CLEAR-MOT evaluation on absolute (odometry-composed) trajectories.

The benchmark convention this mirrors evaluates object positions relative to
the ego; here ground truth is first rigidly transformed by the ego odometry
so the comparison happens in world coordinates, and matching gates on ground
plane distance instead of box overlap.
"""

import math
from dataclasses import dataclass

import numpy as np

from .tracking import solve_assignment

DEFAULT_MATCH_THRESHOLD = 3.0  # meters
MT_CUTOFF = 0.8
ML_CUTOFF = 0.2


class UndefinedMetricsError(ValueError):
    """Evaluation over empty ground truth is undefined."""


class MissingOdometryError(ValueError):
    """Ground-truth frames lack odometry poses."""


def absolutize_ground_truth(relative_gt, odometry):
    """Rigidly transform per-frame ego-relative positions into world frame.

    Args:
        relative_gt: iterable of (frame, object_id, x, y) with x forward and
            y left of the ego at that frame.
        odometry: {frame: (x, y, yaw)} ego poses.

    Returns:
        list of (frame, object_id, x, y) in world coordinates.
    """
    missing = sorted({int(f) for f, *_ in relative_gt} - set(odometry))
    if missing:
        raise MissingOdometryError(f"odometry missing frames {missing}")
    out = []
    for frame, obj, x, y in relative_gt:
        ex, ey, yaw = odometry[int(frame)]
        c, s = math.cos(yaw), math.sin(yaw)
        out.append((int(frame), obj, ex + c * x - s * y, ey + s * x + c * y))
    return out


@dataclass
class MetricsReport:
    MOTA: float
    MOTP: float
    MODA: float
    MODP: float
    recall: float
    precision: float
    F1: float
    FAR: float
    TP: int
    FP: int
    FN: int
    IDSW: int
    objects: int
    trajectories: int
    MT: float
    PT: float
    ML: float

    def to_dict(self):
        return {
            "MOTA": self.MOTA, "MOTP": self.MOTP, "MODA": self.MODA,
            "MODP": self.MODP, "recall": self.recall, "precision": self.precision,
            "F1": self.F1, "FAR": self.FAR, "TP": self.TP, "FP": self.FP,
            "FN": self.FN, "IDSW": self.IDSW, "objects": self.objects,
            "trajectories": self.trajectories, "MT": self.MT, "PT": self.PT,
            "ML": self.ML,
        }

    def to_text(self):
        """Three-block plain-text table."""
        lines = []
        lines.append("MOTA | MOTP | MODA | MODP | recall")
        lines.append(
            f"{self.MOTA:.2f} % | {self.MOTP:.2f} % | {self.MODA:.2f} % | "
            f"{self.MODP:.2f} % | {self.recall:.2f} %"
        )
        lines.append("")
        lines.append("precision | F1 | TP | FP | FN | FAR")
        lines.append(
            f"{self.precision:.2f} % | {self.F1:.2f} % | {self.TP} | {self.FP} | "
            f"{self.FN} | {self.FAR:.2f} %"
        )
        lines.append("")
        lines.append("objects | trajectories | MT | PT | ML")
        lines.append(
            f"{self.objects} | {self.trajectories} | {self.MT:.2f} % | "
            f"{self.PT:.2f} % | {self.ML:.2f} %"
        )
        return "\n".join(lines) + "\n"


def _by_frame(records):
    frames = {}
    for frame, obj, x, y in records:
        frames.setdefault(int(frame), []).append((obj, float(x), float(y)))
    for items in frames.values():
        items.sort(key=lambda r: str(r[0]))
    return frames


def _match_frame(gt_items, est_items, threshold, keep_pairs=None):
    """Match one frame's objects on euclidean distance gated at threshold.

    keep_pairs, when given, is the {gt_id: est_id} mapping from the previous
    frame; still-valid pairs are preserved before the optimal assignment runs
    on the remainder (the CLEAR continuity rule).
    """
    matches = {}
    dists = {}
    gt_left = list(range(len(gt_items)))
    est_left = list(range(len(est_items)))
    if keep_pairs:
        est_by_id = {e[0]: j for j, e in enumerate(est_items)}
        for i, (gid, gx, gy) in enumerate(gt_items):
            j = est_by_id.get(keep_pairs.get(gid))
            if j is None or j not in est_left:
                continue
            d = math.hypot(gx - est_items[j][1], gy - est_items[j][2])
            if d <= threshold:
                matches[i] = j
                dists[i] = d
                gt_left.remove(i)
                est_left.remove(j)
    if gt_left and est_left:
        cost = np.empty((len(gt_left), len(est_left)))
        for a, i in enumerate(gt_left):
            for b, j in enumerate(est_left):
                cost[a, b] = math.hypot(gt_items[i][1] - est_items[j][1],
                                        gt_items[i][2] - est_items[j][2])
        assignment = solve_assignment(cost)
        for (a, b) in assignment.pairs:
            if cost[a, b] <= threshold:
                matches[gt_left[a]] = est_left[b]
                dists[gt_left[a]] = float(cost[a, b])
    return matches, dists


def evaluate(gt, est, match_threshold=DEFAULT_MATCH_THRESHOLD):
    """CLEAR-MOT metrics from absolute ground-truth and estimated tracks.

    Both inputs are iterables of (frame, object_id, x, y). Tracking metrics
    (MOTA/MOTP/IDSW) use continuity-preserving matching; detection metrics
    (MODA/MODP) re-match every frame independently, ignoring identity.
    """
    if match_threshold <= 0:
        raise ValueError(f"match_threshold must be positive, got {match_threshold}")
    gt_frames = _by_frame(gt)
    est_frames = _by_frame(est)
    total_gt = sum(len(v) for v in gt_frames.values())
    if total_gt == 0:
        raise UndefinedMetricsError("ground truth contains no object positions")

    frames = sorted(set(gt_frames) | set(est_frames))
    tp = fp = fn = idsw = 0
    tp_d = fp_d = fn_d = 0
    dist_sum = 0.0
    ddist_sum = 0.0
    last_match = {}  # gt_id -> est_id at its last matched frame
    gt_seen = {}
    gt_matched_frames = {}

    for frame in frames:
        gt_items = gt_frames.get(frame, [])
        est_items = est_frames.get(frame, [])
        for gid, *_ in gt_items:
            gt_seen[gid] = gt_seen.get(gid, 0) + 1

        matches, dists = _match_frame(gt_items, est_items, match_threshold, last_match)
        tp += len(matches)
        fp += len(est_items) - len(matches)
        fn += len(gt_items) - len(matches)
        dist_sum += sum(dists.values())
        for i, j in matches.items():
            gid = gt_items[i][0]
            eid = est_items[j][0]
            if gid in last_match and last_match[gid] != eid:
                idsw += 1
            last_match[gid] = eid
            gt_matched_frames[gid] = gt_matched_frames.get(gid, 0) + 1

        d_matches, d_dists = _match_frame(gt_items, est_items, match_threshold)
        tp_d += len(d_matches)
        fp_d += len(est_items) - len(d_matches)
        fn_d += len(gt_items) - len(d_matches)
        ddist_sum += sum(d_dists.values())

    mota = (1.0 - (fn + fp + idsw) / total_gt) * 100.0
    moda = (1.0 - (fn_d + fp_d) / total_gt) * 100.0
    motp = (1.0 - (dist_sum / tp) / match_threshold) * 100.0 if tp else 0.0
    modp = (1.0 - (ddist_sum / tp_d) / match_threshold) * 100.0 if tp_d else 0.0
    recall = tp / (tp + fn) * 100.0
    precision = tp / (tp + fp) * 100.0 if (tp + fp) else 0.0
    f1 = (2 * precision * recall / (precision + recall)) if (precision + recall) else 0.0
    far = fp / len(frames) * 100.0

    n_traj = len(gt_seen)
    mt = pt = ml = 0
    for gid, lifespan in gt_seen.items():
        ratio = gt_matched_frames.get(gid, 0) / lifespan
        if ratio >= MT_CUTOFF:
            mt += 1
        elif ratio <= ML_CUTOFF:
            ml += 1
        else:
            pt += 1

    return MetricsReport(
        MOTA=mota, MOTP=motp, MODA=moda, MODP=modp,
        recall=recall, precision=precision, F1=f1, FAR=far,
        TP=tp, FP=fp, FN=fn, IDSW=idsw,
        objects=total_gt, trajectories=n_traj,
        MT=mt / n_traj * 100.0, PT=pt / n_traj * 100.0, ML=ml / n_traj * 100.0,
    )
