"""Synthetic scene rendering: scripted cuboid vehicles on a straight lane
geometry, rendered through the same pinhole model the pipeline inverts.

A scene script is a JSON object (or an equivalent dict):

    {
      "frame_rate": 10.0,
      "frame_count": 60,
      "image_width": 640, "image_height": 192,
      "focal_length": 640.0,
      "camera_height": 1.65,
      "lane_width": 3.7,
      "lane_lines": [-5.55, -1.85, 1.85, 5.55],   # world y of painted lines
      "lane_heading_slope": 0.0,                   # lateral drift per meter of depth
      "ego": {"speed": 20.0},
      "agents": [
        {"id": 1, "dims": [1.6, 1.7, 1.4],         # length, width, height (m)
         "path": [[0.0, 20.0, 0.0], [5.9, 70.0, 0.0]]}   # (t, x, y) knots
      ]
    }

Each frame yields detections with exact masks, a ground+cuboid depth map,
lane pixels, odometry, and ground-truth center trajectories. Agents exist
only inside their path's time span; an agent reaching behind the camera
inside that span is a script error naming the frame.
"""

import json
import math
import os

import numpy as np

from .config import PipelineConfig
from . import io_formats
from .camera_geometry import DepthMap, PixelMask
from .tracking import BBox2D, Detection

GROUND_RANGE = 300.0  # meters; rows farther than this stay invalid


class ScriptError(ValueError):
    """Scene script is inconsistent with the renderer's assumptions."""


def _require(script, key, default=None):
    if key in script:
        return script[key]
    if default is not None:
        return default
    raise ScriptError(f"scene script missing required key {key!r}")


class _Agent:
    def __init__(self, spec):
        self.id = int(_require(spec, "id"))
        dims = _require(spec, "dims")
        if len(dims) != 3 or min(dims) <= 0:
            raise ScriptError(f"agent {self.id}: dims must be three positive numbers")
        self.length, self.width, self.height = (float(d) for d in dims)
        path = _require(spec, "path")
        if len(path) < 1:
            raise ScriptError(f"agent {self.id}: empty path")
        knots = sorted((float(t), float(x), float(y)) for t, x, y in path)
        self.t = np.array([k[0] for k in knots])
        self.x = np.array([k[1] for k in knots])
        self.y = np.array([k[2] for k in knots])

    def active(self, t):
        return self.t[0] - 1e-9 <= t <= self.t[-1] + 1e-9

    def position(self, t):
        return float(np.interp(t, self.t, self.x)), float(np.interp(t, self.t, self.y))


def _render_ground(buffer, fl, c_v, camera_height):
    h, w = buffer.shape
    rows = np.arange(h)
    below = rows[rows > c_v + 1e-9]
    z = camera_height * fl / (below - c_v)
    usable = below[z <= GROUND_RANGE]
    buffer[usable, :] = np.minimum(
        buffer[usable, :], (camera_height * fl / (usable - c_v))[:, None]
    )


def _render_cuboid(shape, fl, c_u, c_v, camera_height, x_cam, z_cam, dims):
    """Depth layer for one axis-aligned cuboid: front face plus top face."""
    length, width, height = dims
    img_h, img_w = shape
    layer = np.full(shape, np.inf)
    z_front = z_cam - length / 2.0
    z_back = z_cam + length / 2.0
    x_lo = x_cam - width / 2.0
    x_hi = x_cam + width / 2.0
    y_top = camera_height - height
    y_bot = camera_height

    def cols(u0, u1):
        a = max(0, int(math.ceil(u0)))
        b = min(img_w - 1, int(math.floor(u1)))
        return a, b

    def rows(v0, v1):
        a = max(0, int(math.ceil(v0)))
        b = min(img_h - 1, int(math.floor(v1)))
        return a, b

    # front face: constant depth plane
    ca, cb = cols(x_lo * fl / z_front + c_u, x_hi * fl / z_front + c_u)
    ra, rb = rows(y_top * fl / z_front + c_v, y_bot * fl / z_front + c_v)
    if ca <= cb and ra <= rb:
        layer[ra:rb + 1, ca:cb + 1] = np.minimum(layer[ra:rb + 1, ca:cb + 1], z_front)

    # top face: visible only when the camera sits above the roof
    if y_top > 1e-6:
        ra, rb = rows(y_top * fl / z_back + c_v, y_top * fl / z_front + c_v)
        for v in range(ra, rb + 1):
            if v <= c_v:
                continue
            z_row = y_top * fl / (v - c_v)
            if not (z_front <= z_row <= z_back):
                continue
            ca, cb = cols(x_lo * fl / z_row + c_u, x_hi * fl / z_row + c_u)
            if ca <= cb:
                layer[v, ca:cb + 1] = np.minimum(layer[v, ca:cb + 1], z_row)
    return layer


def _lane_pixels(fl, c_u, c_v, img_w, img_h, camera_height, lane_ys, heading_slope):
    """Exact lane-line pixel coordinates over the lower 40% of rows.

    Lines are painted three pixels wide, like a segmentation output, which
    keeps their density above the default clustering minimum."""
    pixels = []
    row_lo = int(math.ceil(0.6 * img_h))
    for y_line in lane_ys:
        for v in range(max(row_lo, int(math.floor(c_v)) + 1), img_h):
            z = camera_height * fl / (v - c_v)
            if z <= 0.5 or z > 120.0:
                continue
            u = (-y_line + heading_slope * z) * fl / z + c_u
            for du in (-1.0, 0.0, 1.0):
                if 0.0 <= u + du < img_w:
                    pixels.append((u + du, float(v)))
    return np.asarray(pixels, dtype=np.float64).reshape(-1, 2)


def generate_synthetic(script, output_dir):
    """Render a scene script into a pipeline-ready input directory.

    Writes detections.jsonl, depth/%06d.pgm, masks/, lanes.jsonl,
    odometry.csv, gt_tracks.csv and config.toml. Returns a summary dict with
    the ground-truth trajectories keyed by agent id.
    """
    if isinstance(script, (str, os.PathLike)):
        with open(script, "r", encoding="utf-8") as fh:
            script = json.load(fh)

    frame_rate = float(_require(script, "frame_rate", 10.0))
    frame_count = int(_require(script, "frame_count"))
    img_w = int(_require(script, "image_width", 640))
    img_h = int(_require(script, "image_height", 192))
    fl = float(_require(script, "focal_length", 640.0))
    camera_height = float(_require(script, "camera_height", 1.65))
    lane_width = float(_require(script, "lane_width", 3.7))
    lane_ys = [float(y) for y in script.get("lane_lines", [-1.85, 1.85])]
    heading_slope = float(script.get("lane_heading_slope", 0.0))
    ego_speed = float(_require(script.get("ego", {}), "speed", 0.0))
    agents = [_Agent(a) for a in script.get("agents", [])]
    ids = [a.id for a in agents]
    if len(set(ids)) != len(ids):
        raise ScriptError(f"duplicate agent ids {ids}")

    c_u, c_v = img_w / 2.0, img_h / 2.0
    os.makedirs(output_dir, exist_ok=True)
    depth_dir = os.path.join(output_dir, "depth")
    mask_dir = os.path.join(output_dir, "masks")
    os.makedirs(depth_dir, exist_ok=True)
    os.makedirs(mask_dir, exist_ok=True)

    detections = []
    lane_frames = {}
    odometry = []
    gt_rows = []
    gt_traj = {a.id: [] for a in agents}

    for frame in range(frame_count):
        t = frame / frame_rate
        ego_x = ego_speed * t
        odometry.append((frame, ego_x, 0.0, 0.0))

        buffer = np.full((img_h, img_w), np.inf)
        _render_ground(buffer, fl, c_v, camera_height)
        layers = []
        for agent in agents:
            if not agent.active(t):
                layers.append(None)
                continue
            ax, ay = agent.position(t)
            x_cam = -(ay - 0.0)  # camera x is right = -world left
            z_cam = ax - ego_x
            if z_cam - agent.length / 2.0 <= 0.1:
                raise ScriptError(
                    f"agent {agent.id} is behind the camera at frame {frame}"
                )
            layer = _render_cuboid((img_h, img_w), fl, c_u, c_v, camera_height,
                                   x_cam, z_cam, (agent.length, agent.width, agent.height))
            layers.append(layer)
            buffer = np.minimum(buffer, layer)
            gt_rows.append((frame, agent.id, ax, ay))
            gt_traj[agent.id].append((frame, ax, ay))

        depth = np.where(np.isfinite(buffer), buffer, 0.0)
        io_formats.write_depth_pgm(
            os.path.join(depth_dir, f"{frame:06d}.pgm"),
            DepthMap(img_w, img_h, depth),
        )

        for agent, layer in zip(agents, layers):
            if layer is None:
                continue
            visible = np.isfinite(layer) & (layer <= buffer)
            if not visible.any():
                continue
            vv, uu = np.nonzero(visible)
            bbox = BBox2D(float(uu.min()), float(vv.min()),
                          float(uu.max() + 1), float(vv.max() + 1))
            mask_name = f"masks/{frame:06d}_{agent.id:02d}.png"
            io_formats.write_mask_png(
                os.path.join(output_dir, mask_name),
                PixelMask(img_w, img_h, visible),
            )
            detections.append(Detection(frame=frame, bbox=bbox, score=1.0,
                                        mask_file=mask_name, cls="car"))

        lane_frames[frame] = _lane_pixels(fl, c_u, c_v, img_w, img_h,
                                          camera_height, lane_ys, heading_slope)

    io_formats.write_detections_jsonl(os.path.join(output_dir, "detections.jsonl"), detections)
    io_formats.write_lanes_jsonl(os.path.join(output_dir, "lanes.jsonl"), lane_frames)
    io_formats.write_odometry_csv(os.path.join(output_dir, "odometry.csv"), odometry)
    io_formats.write_tracks_csv(os.path.join(output_dir, "gt_tracks.csv"), gt_rows)

    config = PipelineConfig(
        frame_rate=frame_rate,
        intrinsics_source="config",
        focal_length=fl,
        image_width=img_w,
        image_height=img_h,
        camera_height=camera_height,
        lane_width=lane_width,
        ego_mode="constant_straight",
        ego_speed=ego_speed,
    )
    config.to_file(os.path.join(output_dir, "config.toml"))

    return {
        "output_dir": output_dir,
        "frame_count": frame_count,
        "ground_truth": gt_traj,
        "config": config,
    }
