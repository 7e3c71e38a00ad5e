import json
import subprocess
import sys

import pytest

from evident_fuse.cli import main
from evident_fuse.data import SyntheticSpec

ZADEH = [{"beliefs": [0.99, 0.0, 0.01], "uncertainty": 0.0},
         {"beliefs": [0.0, 0.99, 0.01], "uncertainty": 0.0}]
SMALL = SyntheticSpec(class_count=3, view_count=2, feature_dim=5, samples_per_class=30, ood_samples=20)


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture(scope="module")
def small_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    spec = write_json(root / "spec.json", SMALL.to_json())
    assert main(["gen-data", "--spec", spec, "--seed", "0", "--out", str(root / "data")]) == 0
    return root


class TestFuse:
    def test_ds_zadeh(self, tmp_path, capsys):
        assert main(["fuse", write_json(tmp_path / "o.json", ZADEH), "--rule", "ds"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["beliefs"] == pytest.approx([0, 0, 1], abs=1e-9)
        assert out["rule"] == "ds" and out["evidence"] is None

    def test_ider_default(self, tmp_path, capsys):
        assert main(["fuse", write_json(tmp_path / "o.json", ZADEH)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["beliefs"][2] < 0.02 and out["rule"] == "ider"
        assert out["normalizer"] == pytest.approx(1.0001)

    def test_single_opinion_echo(self, tmp_path, capsys):
        one = [{"beliefs": [0.2, 0.3], "uncertainty": 0.5}]
        assert main(["fuse", write_json(tmp_path / "o.json", one)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["beliefs"] == [0.2, 0.3] and out["uncertainty"] == 0.5
        assert out["evidence"] == pytest.approx([0.8, 1.2])

    def test_stdin_and_out_file(self, tmp_path, monkeypatch, capsys):
        import io
        monkeypatch.setattr(sys, "stdin", io.StringIO(json.dumps(ZADEH)))
        assert main(["fuse", "-", "--out", str(tmp_path / "r.json")]) == 0
        assert json.loads((tmp_path / "r.json").read_text())["rule"] == "ider"

    def test_invalid_opinion(self, tmp_path, capsys):
        bad = [{"beliefs": [0.9, 0.3], "uncertainty": 0.5}]
        assert main(["fuse", write_json(tmp_path / "o.json", bad)]) == 1
        assert "expected 1" in capsys.readouterr().err

    def test_unknown_field(self, tmp_path, capsys):
        bad = [{"beliefs": [0.5, 0.5], "uncertainty": 0.0, "base_rate": 1}]
        assert main(["fuse", write_json(tmp_path / "o.json", bad)]) == 1
        assert "base_rate" in capsys.readouterr().err

    def test_total_conflict(self, tmp_path, capsys):
        opp = [{"beliefs": [1, 0], "uncertainty": 0}, {"beliefs": [0, 1], "uncertainty": 0}]
        assert main(["fuse", write_json(tmp_path / "o.json", opp), "--rule", "ds"]) == 1
        assert "total conflict" in capsys.readouterr().err


class TestUsage:
    def test_unknown_subcommand(self, capsys):
        assert main(["frobnicate"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert main(["demo-zadeh", "--colour"]) == 1

    def test_seed_required(self, tmp_path, capsys):
        assert main(["gen-data", "--out", str(tmp_path)]) == 1
        assert "--seed" in capsys.readouterr().err

    def test_negative_seed(self, tmp_path, capsys):
        assert main(["gen-data", "--seed", "-1", "--out", str(tmp_path)]) == 1


class TestPipeline:
    def test_train_and_evaluate(self, small_dataset, capsys):
        root = small_dataset
        cfg = write_json(root / "cfg.json", {"max_epochs": 3})
        manifest = str(root / "data" / "manifest.json")
        assert main(["train", "--manifest", manifest, "--config", cfg, "--seed", "1",
                     "--out", str(root / "run")]) == 0
        lines = (root / "run" / "train_log.jsonl").read_text().splitlines()
        assert [json.loads(x)["epoch"] for x in lines] == [0, 1, 2]
        capsys.readouterr()
        assert main(["evaluate", "--checkpoint", str(root / "run" / "checkpoint.json"),
                     "--manifest", manifest, "--rule", "ds", "--out", str(root / "m.json")]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert 0 <= rep["accuracy"] <= 1 and rep["mean_uncertainty_ood"] is not None
        assert json.loads((root / "m.json").read_text()) == rep

    def test_evaluate_missing_file(self, small_dataset, capsys):
        missing = str(small_dataset / "nowhere" / "checkpoint.json")
        assert main(["evaluate", "--checkpoint", missing,
                     "--manifest", str(small_dataset / "data" / "manifest.json")]) == 1
        assert missing in capsys.readouterr().err

    def test_runtime_failure_exit_2(self, small_dataset, tmp_path, capsys):
        obj = json.loads((small_dataset / "data" / "manifest.json").read_text())
        obj["split"]["test"] = obj["split"]["test"] + obj["split"]["train"]
        obj["split"]["train"] = []
        data_dir = small_dataset / "data"
        bad = write_json(data_dir / "empty_train.json", obj)
        assert main(["train", "--manifest", bad, "--seed", "0", "--out", str(tmp_path)]) == 2
        assert "empty" in capsys.readouterr().err

    def test_gen_data_byte_identical(self, small_dataset, tmp_path):
        spec = str(small_dataset / "spec.json")
        assert main(["gen-data", "--spec", spec, "--seed", "0", "--out", str(tmp_path / "again")]) == 0
        for name in ("view0.csv", "labels.csv", "manifest.json", "conflicts.csv"):
            assert (tmp_path / "again" / name).read_bytes() == (small_dataset / "data" / name).read_bytes()


def test_demo_zadeh(tmp_path, capsys):
    assert main(["demo-zadeh", "--out", str(tmp_path / "z.json")]) == 0
    assert "conflict mass" in capsys.readouterr().out
    rep = json.loads((tmp_path / "z.json").read_text())
    assert rep["ds"]["beliefs"][2] == pytest.approx(1.0)


def test_exp_ood_with_checkpoint(small_dataset, tmp_path, capsys):
    manifest = str(small_dataset / "data" / "manifest.json")
    cfg = write_json(tmp_path / "cfg.json", {"max_epochs": 2})
    assert main(["train", "--manifest", manifest, "--config", cfg, "--seed", "0",
                 "--out", str(tmp_path / "run")]) == 0
    assert main(["exp-ood", "--seed", "0", "--manifest", manifest, "--config", cfg,
                 "--checkpoint", str(tmp_path / "run" / "checkpoint.json"), "--out", str(tmp_path / "ood")]) == 0
    assert (tmp_path / "ood" / "ood_histograms.csv").is_file()
    rep = json.loads((tmp_path / "ood" / "ood_report.json").read_text())
    assert rep["provenance"]["seed"] == 0


def test_exp_robustness_small(tmp_path, capsys):
    spec = write_json(tmp_path / "spec.json", SMALL.to_json())
    cfg = write_json(tmp_path / "cfg.json", {"max_epochs": 1})
    assert main(["exp-robustness", "--seed", "3", "--n-seeds", "1", "--spec", spec, "--config", cfg,
                 "--out", str(tmp_path / "rob")]) == 0
    rep = json.loads((tmp_path / "rob" / "robustness_report.json").read_text())
    assert [r["seed"] for r in rep["runs"]] == [3]
    assert (tmp_path / "rob" / "robustness.csv").is_file()


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "evident_fuse.cli", "fuse",
                           write_json(tmp_path / "o.json", ZADEH), "--rule", "ds"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["beliefs"][2] == pytest.approx(1.0)


def test_log_env_var(tmp_path):
    env = {"EVIDENT_FUSE_LOG": "info", "PATH": "/usr/bin:/bin"}
    proc = subprocess.run([sys.executable, "-m", "evident_fuse.cli", "gen-data", "--seed", "0",
                           "--spec", write_json(tmp_path / "s.json", SMALL.to_json()),
                           "--out", str(tmp_path / "d")], capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "INFO" in proc.stderr
