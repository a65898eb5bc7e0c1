import json

import numpy as np
import pytest
from typer.testing import CliRunner

from pyhub.polarocc.core.cli import app
from pyhub.polarocc.pipeline import config_from_dict
from pyhub.polarocc.tensor import read_array, write_array

runner = CliRunner()

TINY = {
    "grid": {"preset": "tiny"},
    "channels": 3,
    "lidar": {"n_beams": 8, "points_per_beam": 90},
    "dataset": {"train_scenes": 2, "val_scenes": 1},
    "train": {"steps": 2},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY))
    return path


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


class TestSynth:
    def test_writes_four_files_and_manifest(self, tmp_path, config_path):
        out = tmp_path / "data"
        result = invoke("synth", "--out", out, "--scenes", 1, "--config", config_path)
        assert result.exit_code == 0, result.output
        names = sorted(p.name for p in out.iterdir())
        assert names == [
            "camera_0000.pvoarr",
            "cloud_0000.csv",
            "manifest.json",
            "scene_0000.json",
            "truth_0000.pvosem",
        ]
        manifest = json.loads((out / "manifest.json").read_text())
        assert len(manifest["outputs"]) == 4

    def test_zero_scenes_writes_manifest_only(self, tmp_path, config_path):
        out = tmp_path / "empty"
        result = invoke("synth", "--out", out, "--scenes", 0, "--config", config_path)
        assert result.exit_code == 0, result.output
        assert [p.name for p in out.iterdir()] == ["manifest.json"]

    def test_same_seed_same_bytes(self, tmp_path, config_path):
        for name in ("a", "b"):
            result = invoke("synth", "--out", tmp_path / name, "--config", config_path, "--seed", 7, "--format", "bin")
            assert result.exit_code == 0, result.output
        for name in ("cloud_0000.bin", "truth_0000.pvosem", "scene_0000.json", "camera_0000.pvoarr"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestRun:
    def test_oracle_scores_one(self, tmp_path, config_path):
        data = tmp_path / "data"
        assert invoke("synth", "--out", data, "--scenes", 2, "--config", config_path).exit_code == 0
        report_path = tmp_path / "report.json"
        result = invoke("run", "--data", data, "--out", report_path, "--config", config_path, "--oracle")
        assert result.exit_code == 0, result.output
        report = json.loads(report_path.read_text())
        assert report["iou"] == 1.0
        assert report["miou"] == 1.0
        assert (tmp_path / "report.manifest.json").is_file()

        args = ("run", "--data", data, "--out", report_path, "--config", config_path, "--oracle", "--print", "json")
        result = invoke(*args)
        assert result.exit_code == 0, result.output
        printed = result.output[result.output.index("{") : result.output.rindex("}") + 1]
        assert json.loads(printed)["iou"] == 1.0

    def test_untrained_model_with_bands(self, tmp_path, config_path):
        data = tmp_path / "data"
        invoke("synth", "--out", data, "--config", config_path)
        report_path = tmp_path / "report.json"
        result = invoke("run", "--data", data, "--out", report_path, "--config", config_path, "--bands", 3)
        assert result.exit_code == 0, result.output
        report = json.loads(report_path.read_text())
        assert 0.0 <= report["iou"] <= 1.0
        assert len(report["bands"]) == 3

    def test_missing_data_dir(self, tmp_path, config_path):
        result = invoke("run", "--data", tmp_path / "nope", "--out", tmp_path / "r.json", "--config", config_path)
        assert result.exit_code == 2

    def test_empty_data_dir(self, tmp_path, config_path):
        (tmp_path / "data").mkdir()
        result = invoke("run", "--data", tmp_path / "data", "--out", tmp_path / "r.json", "--config", config_path)
        assert result.exit_code == 2


class TestConfigErrors:
    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"bogus": 1}))
        result = invoke("synth", "--out", tmp_path / "out", "--config", path)
        assert result.exit_code == 2
        assert "bogus" in result.output

    def test_missing_config_file(self, tmp_path):
        result = invoke("synth", "--out", tmp_path / "out", "--config", tmp_path / "missing.json")
        assert result.exit_code == 2


def test_version():
    result = invoke("--version")
    assert result.exit_code == 0
    assert result.output.strip()


class TestTrain:
    def test_writes_log_checkpoint_and_report(self, tmp_path, config_path):
        out = tmp_path / "train"
        result = invoke("train", "--out", out, "--config", config_path)
        assert result.exit_code == 0, result.output
        lines = (out / "train.jsonl").read_text().splitlines()
        assert [json.loads(line)["step"] for line in lines] == [0, 1]
        assert (out / "params.bin").is_file()
        assert (out / "params.bin.names.json").is_file()
        assert "iou" in json.loads((out / "report.json").read_text())
        assert (out / "manifest.json").is_file()

        data = tmp_path / "data"
        invoke("synth", "--out", data, "--config", config_path)
        report_path = tmp_path / "report.json"
        args = ("run", "--data", data, "--out", report_path, "--config", config_path, "--params", out / "params.bin")
        assert invoke(*args).exit_code == 0


class TestStats:
    def test_histograms(self, tmp_path, config_path):
        out = tmp_path / "stats"
        result = invoke("stats", "--out", out, "--config", config_path, "--scenes", 2, "--bands", 3)
        assert result.exit_code == 0, result.output
        data = json.loads((out / "stats.json").read_text())
        assert len(data["histograms"]["polar"]) == 3
        assert len(data["histograms"]["cartesian"]) == 3
        assert set(data["density_ratio"]) == {"polar", "cartesian"}
        assert len(data["range_miou"]) == 3
        assert data["model"]


class TestResample:
    def test_polar_to_cartesian(self, tmp_path, config_path):
        cfg = config_from_dict(TINY)
        polar_bins = tuple(cfg.polar_spec().bins)
        source = tmp_path / "polar.pvoarr"
        write_array(source, np.ones(polar_bins + (2,)))
        target = tmp_path / "cart.pvoarr"
        result = invoke("resample", "--in", source, "--out", target, "--config", config_path)
        assert result.exit_code == 0, result.output
        assert read_array(target).shape == tuple(cfg.output_spec().bins) + (2,)
        assert (tmp_path / "cart.manifest.json").is_file()

    def test_manifest_records_seed(self, tmp_path, config_path):
        source = tmp_path / "polar.pvoarr"
        write_array(source, np.ones(tuple(config_from_dict(TINY).polar_spec().bins) + (1,)))
        target = tmp_path / "o.pvoarr"
        result = invoke("resample", "--in", source, "--out", target, "--config", config_path, "--seed", 7)
        assert result.exit_code == 0, result.output
        assert json.loads((tmp_path / "o.manifest.json").read_text())["seed"] == 7

    def test_shape_mismatch(self, tmp_path, config_path):
        source = tmp_path / "polar.pvoarr"
        write_array(source, np.ones((2, 2, 2, 1)))
        result = invoke("resample", "--in", source, "--out", tmp_path / "o.pvoarr", "--config", config_path)
        assert result.exit_code == 2


@pytest.mark.slow
def test_gradcheck_passes(tmp_path):
    result = invoke("gradcheck", "--out", tmp_path)
    assert result.exit_code == 0, result.output
    assert json.loads((tmp_path / "gradcheck.json").read_text())["passed"] is True


@pytest.mark.parametrize("command", ["synth", "run", "train", "ablate", "gradcheck", "stats", "resample"])
def test_every_command_accepts_seed_and_config(command):
    result = invoke(command, "--help")
    assert result.exit_code == 0, result.output
    assert "--seed" in result.output
    assert "--config" in result.output
    assert "--out" in result.output


@pytest.mark.parametrize("command", ["run", "train", "ablate", "stats"])
def test_scene_parallel_commands_accept_threads(command):
    assert "--threads" in invoke(command, "--help").output
