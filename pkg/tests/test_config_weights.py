import dataclasses
import math

import numpy as np
import pytest

from pillarmix.config import (BackboneConfig, ConfigError, PipelineConfig,
                              config_from_dict, default_config, load_config)
from pillarmix.head import HEATMAP_PRIOR_LOGIT
from pillarmix.rng import SplitMix64
from pillarmix.weights import (MAGIC, build_params, load_weights,
                               random_mixer_layer, random_weights,
                               save_weights, tensor_specs)

SMALL_YAML = """
voxel:
  range: [-7.2, 7.2, -7.2, 7.2, -3.0, 5.0]
  feature_dim: 16
backbone:
  layers: 2
  kernel: 5
  feature_dim: 16
  schedule: [32, 64]
bev:
  base_channels: 4
  fused_channels: 8
"""


def small_cfg() -> PipelineConfig:
    import yaml
    return config_from_dict(yaml.safe_load(SMALL_YAML))


class TestConfigLoading:
    def test_packaged_default_equals_dataclass_defaults(self):
        assert default_config() == PipelineConfig()

    def test_empty_yaml_gives_defaults(self, tmp_path):
        p = tmp_path / "empty.yaml"
        p.write_text("")
        assert load_config(str(p)) == PipelineConfig()

    def test_unknown_top_level_key(self):
        with pytest.raises(ConfigError, match="voxels"):
            config_from_dict({"voxels": {}})

    def test_unknown_section_field_names_path(self):
        with pytest.raises(ConfigError, match=r"backbone\.kernel_size"):
            config_from_dict({"backbone": {"kernel_size": 7}})

    def test_schedule_length_mismatch_names_field(self):
        with pytest.raises(ConfigError, match=r"backbone\.schedule") as e:
            config_from_dict({"backbone": {"schedule": [100]}})
        assert e.value.field == "backbone.schedule"
        assert "8" in str(e.value)  # default layer count in the message

    def test_non_monotone_schedule(self):
        with pytest.raises(ConfigError, match=r"backbone\.schedule"):
            config_from_dict({"backbone": {"layers": 2, "schedule": [64, 32]}})

    def test_bad_schedule_kind(self):
        with pytest.raises(ConfigError, match=r"backbone\.schedule"):
            config_from_dict({"backbone": {"schedule_kind": "wavy"}})

    def test_even_kernel(self):
        with pytest.raises(ConfigError, match=r"backbone\.kernel"):
            config_from_dict({"backbone": {"kernel": 10}})

    def test_feature_dim_mismatch(self):
        with pytest.raises(ConfigError, match=r"backbone\.feature_dim"):
            config_from_dict({"voxel": {"feature_dim": 64}})

    def test_grid_not_divisible_by_four(self):
        with pytest.raises(ConfigError, match=r"voxel\.range"):
            config_from_dict({"voxel": {"range": [0, 3.0, 0, 3.0, -1, 1]}})

    def test_range_length_checked(self):
        with pytest.raises(ConfigError, match="6 entries"):
            config_from_dict({"voxel": {"range": [0, 1, 0, 1]}})

    def test_invalid_yaml_file(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("voxel: [unclosed\n")
        with pytest.raises(ConfigError, match="YAML"):
            load_config(str(p))

    def test_missing_file_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_config(str(tmp_path / "nope.yaml"))

    def test_error_exposes_field_attribute(self):
        try:
            config_from_dict({"head": {"score_thresh": 2.0}})
        except ConfigError as e:
            assert e.field == "head"
        else:
            pytest.fail("expected ConfigError")

    def test_small_config_round_trip_values(self):
        cfg = small_cfg()
        assert cfg.voxel.dims == (48, 48)
        assert cfg.backbone.to_schedule().pad_multiple() == 64
        assert cfg.bev.stage_channels() == (4, 8, 16)


class TestTensorEnumeration:
    def test_default_config_tensor_count(self):
        # encoder (2) + 8 mixer layers (16 each) + bev entries/blocks/fuse
        # (2 per conv: 3 entries + 2*(2+3+3) blocks... ) + head (8)
        specs = tensor_specs(PipelineConfig())
        n_bev_convs = 3 + 2 * (2 + 3 + 3) + 1
        assert len(specs) == 2 + 8 * 16 + 2 * n_bev_convs + 8 == 178

    def test_names_unique_and_dotted(self):
        specs = tensor_specs(small_cfg())
        names = [s.name for s in specs]
        assert len(set(names)) == len(names)
        assert "backbone.layer0.dw_kernel" in names
        assert "bev.stage2.block2.conv2.weight" in names
        assert "head.cls_out.bias" in names

    def test_shapes_follow_config(self):
        specs = {s.name: s for s in tensor_specs(small_cfg())}
        assert specs["encoder.weight"].shape == (9, 16)
        assert specs["backbone.layer1.dw_kernel"].shape == (16, 5)
        assert specs["backbone.layer0.w_ffn1"].shape == (16, 64)
        assert specs["bev.fuse.weight"].shape == (1, 1, 28, 8)
        assert specs["head.reg_out.weight"].shape == (1, 1, 8, 8)


class TestRandomInit:
    def test_deterministic(self):
        cfg = small_cfg()
        a = random_weights(cfg, seed=7)
        b = random_weights(cfg, seed=7)
        assert list(a) == list(b)
        for k in a:
            assert np.array_equal(a[k], b[k]), k

    def test_seed_changes_weights(self):
        cfg = small_cfg()
        a = random_weights(cfg, seed=7)
        b = random_weights(cfg, seed=8)
        assert not np.array_equal(a["encoder.weight"], b["encoder.weight"])

    def test_fan_in_bounds(self):
        specs = {s.name: s for s in tensor_specs(small_cfg())}
        tensors = random_weights(small_cfg(), seed=3)
        for name, arr in tensors.items():
            fan = specs[name].fan_in
            if fan is not None and name != "head.cls_out.bias":
                assert float(np.abs(arr).max()) <= 1.0 / math.sqrt(fan) + 1e-7, name

    def test_norm_params_deterministic(self):
        tensors = random_weights(small_cfg(), seed=3)
        assert np.all(tensors["backbone.layer0.norm1_gamma"] == 1.0)
        assert np.all(tensors["backbone.layer1.norm2_beta"] == 0.0)

    def test_heatmap_bias_prior(self):
        tensors = random_weights(small_cfg(), seed=3)
        bias = tensors["head.cls_out.bias"]
        assert np.all(bias == np.float32(HEATMAP_PRIOR_LOGIT))
        # sigmoid of the prior sits near one percent
        assert abs(1.0 / (1.0 + math.exp(-float(bias[0]))) - 0.01) < 1e-3

    def test_random_mixer_layer_matches_field_layout(self):
        layer = random_mixer_layer(SplitMix64(3), 16, 5)
        assert layer.feature_dim == 16 and layer.kernel_size == 5
        assert layer.w_ffn1.shape == (16, 64)
        assert np.all(layer.norm1_gamma == 1.0)


class TestWeightFile:
    def test_round_trip_bit_exact(self, tmp_path):
        cfg = small_cfg()
        tensors = random_weights(cfg, seed=7)
        p = tmp_path / "w.pmx"
        save_weights(tensors, str(p))
        loaded = load_weights(str(p))
        assert list(loaded) == list(tensors)
        for k in tensors:
            assert tensors[k].dtype == loaded[k].dtype == np.float32
            assert np.array_equal(tensors[k], loaded[k]), k

    def test_magic_leads_the_file(self, tmp_path):
        p = tmp_path / "w.pmx"
        save_weights({"t": np.zeros(3, np.float32)}, str(p))
        assert p.read_bytes()[:8] == MAGIC

    def test_bad_magic_rejected(self, tmp_path):
        p = tmp_path / "w.pmx"
        save_weights({"t": np.zeros(3, np.float32)}, str(p))
        raw = bytearray(p.read_bytes())
        raw[0] ^= 0xFF
        p.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="magic"):
            load_weights(str(p))

    def test_corrupt_blob_fails_checksum(self, tmp_path):
        p = tmp_path / "w.pmx"
        save_weights({"t": np.ones(8, np.float32)}, str(p))
        raw = bytearray(p.read_bytes())
        raw[-1] ^= 0x01
        p.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match="checksum"):
            load_weights(str(p))

    def test_truncated_manifest(self, tmp_path):
        p = tmp_path / "w.pmx"
        save_weights({"t": np.ones(8, np.float32)}, str(p))
        p.write_bytes(p.read_bytes()[:20])
        with pytest.raises(ValueError, match="truncated"):
            load_weights(str(p))

    def test_tiny_file_bad_magic(self, tmp_path):
        p = tmp_path / "w.pmx"
        p.write_bytes(b"PM")
        with pytest.raises(ValueError, match="magic"):
            load_weights(str(p))


class TestBuildParams:
    def test_assembles_typed_structs(self):
        cfg = small_cfg()
        params = build_params(cfg, random_weights(cfg, seed=7))
        assert params.encoder.weight.shape == (9, 16)
        assert len(params.backbone) == 2
        assert params.backbone[1].kernel_size == 5
        assert len(params.bev.stages) == 3
        assert len(params.bev.stages[1].blocks) == 3
        assert params.head.cls_out.weight.shape == (1, 1, 8, 3)

    def test_missing_tensor_named(self):
        cfg = small_cfg()
        tensors = random_weights(cfg, seed=7)
        del tensors["backbone.layer1.w_out"]
        with pytest.raises(ValueError, match="missing tensor 'backbone.layer1.w_out'"):
            build_params(cfg, tensors)

    def test_shape_mismatch_named(self):
        cfg = small_cfg()
        tensors = random_weights(cfg, seed=7)
        tensors["encoder.bias"] = np.zeros(4, np.float32)
        with pytest.raises(ValueError, match="encoder.bias"):
            build_params(cfg, tensors)

    def test_extra_tensor_rejected(self):
        cfg = small_cfg()
        tensors = random_weights(cfg, seed=7)
        tensors["rogue"] = np.zeros(1, np.float32)
        with pytest.raises(ValueError, match="unexpected tensor 'rogue'"):
            build_params(cfg, tensors)

    def test_weights_for_wrong_config_rejected(self):
        cfg = small_cfg()
        bigger = dataclasses.replace(
            cfg, backbone=BackboneConfig(layers=3, kernel=5, feature_dim=16,
                                         schedule=(32, 32, 64)))
        with pytest.raises(ValueError, match="missing tensor"):
            build_params(bigger.validate(), random_weights(cfg, seed=7))
