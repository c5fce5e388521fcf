import pytest

from crashsynth.config import ConfigError, PipelineConfig


class TestPipelineConfig:
    def test_defaults_are_valid(self):
        config = PipelineConfig()
        assert config.frame_rate == 10.0
        assert config.lane_width == 3.7
        assert config.accel == 2.5
        assert config.birth_hits == 3
        assert config.death_misses == 5
        assert config.iou_threshold == 0.3

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError) as err:
            PipelineConfig.from_dict({"frame_rate": 10.0, "warp_drive": True})
        assert "warp_drive" in str(err.value)

    @pytest.mark.parametrize("overrides", [
        {"frame_rate": 0.0},
        {"iou_threshold": 1.5},
        {"birth_hits": 0},
        {"sg_window": 10},
        {"sg_window": 3, "sg_polyorder": 3},
        {"local_smoothness": 0.1, "global_smoothness": 0.5},
        {"ego_mode": "teleport"},
        {"intrinsics_source": "guess"},
        {"lane_width": -1.0},
    ])
    def test_out_of_range_rejected(self, overrides):
        with pytest.raises(ConfigError):
            PipelineConfig(**{**{}, **overrides})

    def test_type_enforcement(self):
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"birth_hits": 2.5})
        with pytest.raises(ConfigError):
            PipelineConfig.from_dict({"ego_mode": 3})

    def test_toml_round_trip(self, tmp_path):
        config = PipelineConfig(frame_rate=15.0, ego_speed=25.0,
                                intrinsics_source="config", focal_length=640.0)
        path = tmp_path / "config.toml"
        config.to_file(path)
        back = PipelineConfig.from_file(path)
        assert back == config

    def test_toml_parse_error(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("frame_rate = = 10\n")
        with pytest.raises(ConfigError):
            PipelineConfig.from_file(path)

    def test_int_accepted_for_float_field(self, tmp_path):
        path = tmp_path / "config.toml"
        path.write_text("frame_rate = 30\n")
        config = PipelineConfig.from_file(path)
        assert config.frame_rate == 30.0
        assert isinstance(config.frame_rate, float)
