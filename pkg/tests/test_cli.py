import json

import numpy as np
import pytest

import pillarmix.serializer as ser
from pillarmix.cli import main
from pillarmix.config import config_from_dict
from pillarmix.weights import random_weights, save_weights

import yaml

SMALL_YAML = """\
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


@pytest.fixture
def small_cfg_path(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text(SMALL_YAML)
    return str(p)


@pytest.fixture
def scene_path(tmp_path, small_cfg_path):
    p = tmp_path / "scene.bin"
    rc = main(["synth", "--config", small_cfg_path, "--seed", "7",
               "--num-clusters", "2", "--points-per-cluster", "60",
               "--noise-points", "200", "--out", str(p)])
    assert rc == 0
    return str(p)


class TestSynth:
    def test_deterministic_bytes(self, tmp_path, small_cfg_path):
        a, b = tmp_path / "a.bin", tmp_path / "b.bin"
        for out in (a, b):
            rc = main(["synth", "--config", small_cfg_path, "--seed", "3",
                       "--out", str(out)])
            assert rc == 0
        assert a.read_bytes() == b.read_bytes()
        assert len(a.read_bytes()) % 16 == 0

    def test_impossible_scene_is_config_error(self, tmp_path, small_cfg_path,
                                              capsys):
        rc = main(["synth", "--config", small_cfg_path, "--seed", "3",
                   "--num-clusters", "-1", "--out", str(tmp_path / "x.bin")])
        assert rc == 2
        assert "synth" in capsys.readouterr().err


class TestInfer:
    def test_random_weights_deterministic_json(self, tmp_path, small_cfg_path,
                                               scene_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            rc = main(["infer", "--config", small_cfg_path, "--points", scene_path,
                       "--random-weights", "--seed", "7", "--out", str(out)])
            assert rc == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        payload = json.loads(outs[0])
        assert "detections" in payload
        for rec in payload["detections"]:
            assert set(rec) == {"class_id", "score", "x", "y", "z",
                                "l", "w", "h", "yaw"}
            assert all(np.isfinite(v) for k, v in rec.items() if k != "class_id")

    def test_weights_file_matches_random_init(self, tmp_path, small_cfg_path,
                                              scene_path):
        # saving the seed-7 draw and loading it back must not change output
        cfg = config_from_dict(yaml.safe_load(SMALL_YAML))
        wpath = tmp_path / "w.pmx"
        save_weights(random_weights(cfg, seed=7), str(wpath))

        out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["infer", "--config", small_cfg_path, "--points", scene_path,
                     "--random-weights", "--seed", "7", "--out", str(out_a)]) == 0
        assert main(["infer", "--config", small_cfg_path, "--points", scene_path,
                     "--weights", str(wpath), "--out", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_empty_cloud_zero_detections(self, tmp_path, small_cfg_path):
        empty = tmp_path / "empty.bin"
        empty.write_bytes(b"")
        out = tmp_path / "dets.json"
        rc = main(["infer", "--config", small_cfg_path, "--points", str(empty),
                   "--random-weights", "--out", str(out)])
        assert rc == 0
        assert json.loads(out.read_text()) == {"detections": []}

    def test_order_built_once_per_run(self, tmp_path, small_cfg_path, scene_path):
        before = ser.BUILD_ORDER_CALLS
        main(["infer", "--config", small_cfg_path, "--points", scene_path,
              "--random-weights", "--out", str(tmp_path / "d.json")])
        assert ser.BUILD_ORDER_CALLS == before + 1

    def test_missing_points_file_exit_1(self, tmp_path, small_cfg_path, capsys):
        rc = main(["infer", "--config", small_cfg_path,
                   "--points", str(tmp_path / "ghost.bin"),
                   "--random-weights", "--out", str(tmp_path / "d.json")])
        assert rc == 1
        assert "error" in capsys.readouterr().err

    def test_corrupt_weights_exit_1(self, tmp_path, small_cfg_path, scene_path,
                                    capsys):
        bad = tmp_path / "bad.pmx"
        bad.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        rc = main(["infer", "--config", small_cfg_path, "--points", scene_path,
                   "--weights", str(bad), "--out", str(tmp_path / "d.json")])
        assert rc == 1
        assert "magic" in capsys.readouterr().err

    def test_bad_schedule_exit_2_names_field(self, tmp_path, scene_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("backbone:\n  schedule: [100]\n")
        rc = main(["infer", "--config", str(cfg), "--points", scene_path,
                   "--random-weights", "--out", str(tmp_path / "d.json")])
        assert rc == 2
        assert "backbone.schedule" in capsys.readouterr().err

    def test_weights_flag_required(self, scene_path, tmp_path, capsys):
        with pytest.raises(SystemExit) as e:
            main(["infer", "--points", scene_path, "--out", str(tmp_path / "d.json")])
        assert e.value.code == 2


class TestBench:
    def test_custom_shapes_csv(self, tmp_path, small_cfg_path):
        out = tmp_path / "bench.csv"
        rc = main(["bench", "--config", small_cfg_path,
                   "--shapes", "2,40,16;4,20,16", "--out", str(out)])
        assert rc == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "B,T,C,K,macs,median_ms,p10_ms,p90_ms"
        assert len(lines) == 3
        macs = {line.split(",")[4] for line in lines[1:]}
        assert len(macs) == 1

    def test_stdout_mode(self, small_cfg_path, capsys):
        rc = main(["bench", "--config", small_cfg_path, "--shapes", "2,10,16"])
        assert rc == 0
        assert capsys.readouterr().out.startswith("B,T,C,K,")

    def test_malformed_shapes_exit_2(self, small_cfg_path, capsys):
        rc = main(["bench", "--config", small_cfg_path, "--shapes", "2,10"])
        assert rc == 2
        assert "shapes" in capsys.readouterr().err

    def test_non_integer_shapes_exit_2(self, small_cfg_path):
        assert main(["bench", "--config", small_cfg_path,
                     "--shapes", "a,b,c"]) == 2


class TestFlops:
    def test_backbone_doubles_with_tokens(self, small_cfg_path, capsys):
        macs = {}
        for n in (64, 128):
            rc = main(["flops", "--config", small_cfg_path, "--n-tokens", str(n)])
            assert rc == 0
            for line in capsys.readouterr().out.splitlines():
                if line.startswith("backbone"):
                    macs[n] = int(line.split()[1].replace(",", ""))
        assert macs[128] == 2 * macs[64]

    def test_zero_tokens_all_zero(self, small_cfg_path, capsys):
        rc = main(["flops", "--config", small_cfg_path, "--n-tokens", "0"])
        assert rc == 0
        out = capsys.readouterr().out
        for line in out.splitlines():
            for stage in ("encoder", "backbone", "bev", "head"):
                if line.startswith(stage):
                    assert line.split()[1] == "0"

    def test_negative_tokens_exit_2(self, small_cfg_path, capsys):
        rc = main(["flops", "--config", small_cfg_path, "--n-tokens", "-5"])
        assert rc == 2
        assert "n-tokens" in capsys.readouterr().err

    def test_default_config_mixer_vs_attention_line(self, capsys):
        rc = main(["flops", "--n-tokens", "6000"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "padded to 6144" in out
        assert "mixer layer at T=6144" in out

    def test_unknown_command_exits_2(self):
        with pytest.raises(SystemExit) as e:
            main(["frobnicate"])
        assert e.value.code == 2
