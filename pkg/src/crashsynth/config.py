"""Pipeline configuration: every tunable default lives here, loadable from a
flat TOML key=value file. Unknown keys are rejected."""

import dataclasses
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Configuration file is malformed or out of range."""


@dataclass
class PipelineConfig:
    # timing
    frame_rate: float = 10.0
    sim_duration: float = 0.0  # 0 = derive from the clip length

    # camera: dataset-default values follow the KITTI color cameras, with the
    # principal point pinned to the image center and equal focal lengths
    intrinsics_source: str = "dataset_default"  # dataset_default | config | calibrate
    focal_length: float = 721.5377
    image_width: int = 1242
    image_height: int = 375
    camera_height: float = 1.65
    depth_scale: float = 256.0
    max_depth: float = 120.0

    # tracking
    iou_threshold: float = 0.3
    birth_hits: int = 3
    death_misses: int = 5

    # lanes
    lane_width: float = 3.7
    dbscan_eps: float = 15.0
    dbscan_min_pts: int = 20
    lane_max_cost: float = 50.0
    lane_survival_frames: int = 5

    # ego
    ego_mode: str = "constant_straight"  # constant_straight | from_odometry
    ego_speed: float = 20.0

    # smoothing
    sg_window: int = 11
    sg_polyorder: int = 3
    local_window: int = 25
    local_smoothness: float = 5.0
    global_smoothness: float = 0.5
    max_fill_gap: int = 5

    # scenario
    accel: float = 2.5
    min_gap: float = 6.0
    lane_count: int = 2
    road_knot_spacing: float = 25.0
    standoff: float = 8.0

    # evaluation
    match_threshold: float = 3.0

    # execution
    workers: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        problems = []

        def positive(name):
            if getattr(self, name) <= 0:
                problems.append(f"{name} must be positive, got {getattr(self, name)}")

        def non_negative(name):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0, got {getattr(self, name)}")

        for name in ("frame_rate", "focal_length", "camera_height", "depth_scale",
                     "max_depth", "lane_width", "dbscan_eps", "lane_max_cost",
                     "accel", "min_gap", "match_threshold", "road_knot_spacing",
                     "standoff"):
            positive(name)
        for name in ("sim_duration", "ego_speed", "global_smoothness"):
            non_negative(name)
        for name, minimum in (("image_width", 1), ("image_height", 1),
                              ("birth_hits", 1), ("death_misses", 1),
                              ("dbscan_min_pts", 1), ("lane_survival_frames", 0),
                              ("lane_count", 1), ("workers", 1), ("max_fill_gap", 1)):
            if getattr(self, name) < minimum:
                problems.append(f"{name} must be >= {minimum}, got {getattr(self, name)}")
        if not (0.0 <= self.iou_threshold <= 1.0):
            problems.append(f"iou_threshold must be in [0, 1], got {self.iou_threshold}")
        if self.intrinsics_source not in ("dataset_default", "config", "calibrate"):
            problems.append(f"unknown intrinsics_source {self.intrinsics_source!r}")
        if self.ego_mode not in ("constant_straight", "from_odometry"):
            problems.append(f"unknown ego_mode {self.ego_mode!r}")
        if self.sg_window % 2 != 1 or self.sg_window <= self.sg_polyorder:
            problems.append(
                f"sg_window must be odd and exceed sg_polyorder "
                f"(got {self.sg_window}, {self.sg_polyorder})"
            )
        if self.sg_polyorder < 1:
            problems.append(f"sg_polyorder must be >= 1, got {self.sg_polyorder}")
        if self.local_window < 5:
            problems.append(f"local_window must be >= 5, got {self.local_window}")
        if self.local_smoothness <= self.global_smoothness:
            problems.append(
                f"local_smoothness {self.local_smoothness} must exceed "
                f"global_smoothness {self.global_smoothness}"
            )
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    @classmethod
    def field_names(cls):
        return {f.name for f in dataclasses.fields(cls)}

    @classmethod
    def from_file(cls, path):
        with open(path, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data, source=str(path))

    @classmethod
    def from_dict(cls, data, source="config"):
        known = cls.field_names()
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{source}: unknown keys {unknown}")
        kwargs = {}
        for f in dataclasses.fields(cls):
            if f.name in data:
                value = data[f.name]
                target = f.type if isinstance(f.type, type) else type(f.default)
                if target is float and isinstance(value, (int, float)) and not isinstance(value, bool):
                    value = float(value)
                elif target is int:
                    if isinstance(value, bool) or not isinstance(value, int):
                        raise ConfigError(f"{source}: {f.name} must be an integer, got {value!r}")
                elif target is str and not isinstance(value, str):
                    raise ConfigError(f"{source}: {f.name} must be a string, got {value!r}")
                kwargs[f.name] = value
        return cls(**kwargs)

    def to_file(self, path):
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, str):
                lines.append(f'{f.name} = "{value}"')
            elif isinstance(value, bool):
                lines.append(f"{f.name} = {'true' if value else 'false'}")
            else:
                lines.append(f"{f.name} = {value}")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
