"""File formats: 16-bit PGM depth maps, detection JSONL, lane pixel sources
(PNG masks or JSONL), odometry CSV, and track CSVs for evaluation.

Depth PGMs follow the KITTI convention: meters = sample / 256.0 with sample 0
marking an invalid pixel; the scale is overridable in config.
"""

import csv
import json
import os
import re

import numpy as np
from PIL import Image

from .camera_geometry import DepthMap, PixelMask
from .tracking import BBox2D, Detection

DEPTH_SCALE = 256.0  # samples per meter
PGM_MAXVAL = 65535


class FormatError(ValueError):
    """File contents do not match the expected format."""


# ---------------------------------------------------------------------------
# PGM depth maps (binary P5, 16-bit, big-endian)
# ---------------------------------------------------------------------------

def read_depth_pgm(path, scale=DEPTH_SCALE):
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise FormatError(f"{path}: not a binary PGM (missing P5 magic)")
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # with '#' comments allowed through end-of-line
    tokens = []
    pos = 2
    while len(tokens) < 3:
        m = re.match(rb"(?:\s+|#[^\n]*\n)*(\d+)", data[pos:])
        if not m:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(int(m.group(1)))
        pos += m.end()
    width, height, maxval = tokens
    if maxval != PGM_MAXVAL:
        raise FormatError(f"{path}: expected 16-bit maxval {PGM_MAXVAL}, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    raw = data[pos:pos + width * height * 2]
    if len(raw) != width * height * 2:
        raise FormatError(f"{path}: expected {width * height * 2} sample bytes, got {len(raw)}")
    samples = np.frombuffer(raw, dtype=">u2").astype(np.float64).reshape(height, width)
    return DepthMap(width=width, height=height, depth=samples / scale)


def write_depth_pgm(path, depth_map, scale=DEPTH_SCALE):
    valid = np.isfinite(depth_map.depth) & (depth_map.depth > 0)
    samples = np.where(valid, np.clip(np.round(depth_map.depth * scale), 1, PGM_MAXVAL), 0)
    header = f"P5\n{depth_map.width} {depth_map.height}\n{PGM_MAXVAL}\n".encode()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(samples.astype(">u2").tobytes())


# ---------------------------------------------------------------------------
# detections (JSON Lines)
# ---------------------------------------------------------------------------

def read_detections_jsonl(path):
    """Parse detections into {frame: [Detection, ...]}; frames may be sparse."""
    by_frame = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                det = Detection(
                    frame=int(rec["frame"]),
                    bbox=BBox2D(*(float(v) for v in rec["bbox"])),
                    score=float(rec.get("score", 1.0)),
                    mask_file=rec.get("mask_file"),
                    cls=str(rec.get("class", "car")),
                )
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise FormatError(f"{path}:{lineno}: bad detection record: {exc}") from exc
            by_frame.setdefault(det.frame, []).append(det)
    return by_frame


def write_detections_jsonl(path, detections):
    """detections: iterable of Detection, written frame-sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for det in sorted(detections, key=lambda d: (d.frame, d.bbox.u_min)):
            rec = {
                "frame": det.frame,
                "bbox": [det.bbox.u_min, det.bbox.v_min, det.bbox.u_max, det.bbox.v_max],
                "score": det.score,
                "class": det.cls,
            }
            if det.mask_file is not None:
                rec["mask_file"] = det.mask_file
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# instance masks and lane pixels
# ---------------------------------------------------------------------------

def read_mask_png(path):
    img = np.asarray(Image.open(path).convert("L"))
    return PixelMask(width=img.shape[1], height=img.shape[0], member=img > 0)


def write_mask_png(path, mask):
    Image.fromarray(np.where(mask.member, 255, 0).astype(np.uint8), mode="L").save(path)


def read_lane_pixels_png(path):
    """Nonzero pixels of a mask image as (u, v) in top-left origin."""
    img = np.asarray(Image.open(path).convert("L"))
    vv, uu = np.nonzero(img)
    return np.column_stack([uu, vv]).astype(np.float64)


def read_lanes_jsonl(path):
    """{frame: (N, 2) pixel array} from JSONL lane records."""
    frames = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                frames[int(rec["frame"])] = np.asarray(rec["pixels"], dtype=np.float64).reshape(-1, 2)
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise FormatError(f"{path}:{lineno}: bad lane record: {exc}") from exc
    return frames


def write_lanes_jsonl(path, frames):
    with open(path, "w", encoding="utf-8") as fh:
        for frame in sorted(frames):
            pixels = np.asarray(frames[frame])
            fh.write(json.dumps(
                {"frame": int(frame), "pixels": [[float(u), float(v)] for u, v in pixels]},
                sort_keys=True,
            ) + "\n")


def load_lane_source(input_dir):
    """Auto-detect the lane pixel source by extension.

    A lanes.jsonl file wins over a lanes/ directory of per-frame PNGs named
    %06d.png. Returns {frame: pixels} or None when no lane data exists.
    """
    jsonl = os.path.join(input_dir, "lanes.jsonl")
    if os.path.isfile(jsonl):
        return read_lanes_jsonl(jsonl)
    lane_dir = os.path.join(input_dir, "lanes")
    if os.path.isdir(lane_dir):
        frames = {}
        for name in sorted(os.listdir(lane_dir)):
            if name.endswith(".png"):
                frames[int(name[:-4])] = read_lane_pixels_png(os.path.join(lane_dir, name))
        return frames
    return None


# ---------------------------------------------------------------------------
# odometry and track CSVs
# ---------------------------------------------------------------------------

def read_odometry_csv(path):
    """CSV with header frame,x,y,yaw -> list of (frame, x, y, yaw)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["frame", "x", "y", "yaw"]:
            raise FormatError(f"{path}: expected header 'frame,x,y,yaw', got {header}")
        out = []
        for row in reader:
            if not row:
                continue
            try:
                out.append((int(row[0]), float(row[1]), float(row[2]), float(row[3])))
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}: bad odometry row {row}: {exc}") from exc
    return out


def write_odometry_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("frame,x,y,yaw\n")
        for frame, x, y, yaw in records:
            fh.write(f"{int(frame)},{x:.6f},{y:.6f},{yaw:.6f}\n")


def read_tracks_csv(path):
    """CSV with header frame,object_id,x,y -> list of (frame, id, x, y)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["frame", "object_id", "x", "y"]:
            raise FormatError(f"{path}: expected header 'frame,object_id,x,y', got {header}")
        out = []
        for row in reader:
            if not row:
                continue
            try:
                out.append((int(row[0]), row[1], float(row[2]), float(row[3])))
            except (IndexError, ValueError) as exc:
                raise FormatError(f"{path}: bad track row {row}: {exc}") from exc
    return out


def write_tracks_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("frame,object_id,x,y\n")
        for frame, obj, x, y in sorted(records, key=lambda r: (r[0], str(r[1]))):
            fh.write(f"{int(frame)},{obj},{x:.6f},{y:.6f}\n")


def write_trajectory_csv(path, traj):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("frame,t,x,y,yaw,speed\n")
        for i in range(len(traj)):
            fh.write(
                f"{int(traj.frames[i])},{traj.t[i]:.6f},{traj.x[i]:.6f},"
                f"{traj.y[i]:.6f},{traj.yaw[i]:.6f},{traj.speeds[i]:.6f}\n"
            )
