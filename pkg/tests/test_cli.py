"""End-to-end command-line tests driven through cli.main."""

import json
import os

import pytest

from corrcolor.cli import main
from corrcolor.diagnostics import read_metrics


SMALL_CONFIG = {
    "seed": 5,
    "batch_size": 16,
    "epochs": 2,
    "dataset": {"kind": "synthetic", "num_samples": 48, "sparse_dim": 4,
                "dense_dim": 12},
    "encoder": {"widths": [24, 16, 12], "tap_index": 2},
    "coloring_head": {"widths": [16, 16, 8]},
    "whitening_head": {"widths": [16, 16, 8]},
    "vae_train": {"epochs": 2, "batch_size": 16},
    "eval": {"probe_epochs": 5},
}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "config.json"
    payload = dict(SMALL_CONFIG)
    payload["output_dir"] = str(tmp_path / "run")
    path.write_text(json.dumps(payload))
    return str(path)


class TestShowConfig:
    def test_prints_resolved_json(self, config_path, capsys):
        assert main(["show-config", "--config", config_path]) == 0
        resolved = json.loads(capsys.readouterr().out)
        assert resolved["loss"]["lambda"] == 0.05
        assert resolved["seed"] == 5

    def test_override_reflected(self, config_path, capsys):
        assert main(["show-config", "--config", config_path,
                     "--set", "loss.lambda=0"]) == 0
        assert json.loads(capsys.readouterr().out)["loss"]["lambda"] == 0

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"lose": 1}')
        assert main(["show-config", "--config", str(bad)]) == 2
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "config"


class TestPipeline:
    def test_compute_target_pretrain_eval_diagnose(self, config_path, tmp_path, capsys):
        out = str(tmp_path / "run")
        assert main(["compute-target", "--config", config_path, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "target.bin"))

        assert main(["pretrain", "--config", config_path, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "checkpoint.bin"))
        assert os.path.exists(os.path.join(out, "metrics.csv"))
        assert os.path.exists(os.path.join(out, "manifest.json"))
        assert len(read_metrics(os.path.join(out, "metrics.csv"))) == 2

        assert main(["eval", "--config", config_path, "--out", out]) == 0
        assert os.path.exists(os.path.join(out, "eval.csv"))

        assert main(["diagnose", "--config", config_path, "--out", out, "--svg"]) == 0
        assert os.path.exists(os.path.join(out, "diagnostics.csv"))
        assert os.path.exists(os.path.join(out, "diagnostics.svg"))
        output = capsys.readouterr().out
        assert "accuracy=" in output

    def test_pretrain_without_target_is_prerequisite_error(self, config_path,
                                                           tmp_path, capsys):
        out = str(tmp_path / "fresh")
        code = main(["pretrain", "--config", config_path, "--out", out])
        assert code == 3
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "prerequisite"
        assert "compute-target" in err["message"]

    def test_eval_without_checkpoint_is_prerequisite_error(self, config_path,
                                                           tmp_path, capsys):
        out = str(tmp_path / "fresh")
        assert main(["eval", "--config", config_path, "--out", out]) == 3

    def test_identity_target_skips_compute_step(self, config_path, tmp_path):
        out = str(tmp_path / "idrun")
        assert main(["pretrain", "--config", config_path, "--out", out,
                     "--set", "target.source=identity"]) == 0

    def test_resume_flag(self, config_path, tmp_path):
        out = str(tmp_path / "run")
        assert main(["compute-target", "--config", config_path, "--out", out]) == 0
        assert main(["pretrain", "--config", config_path, "--out", out]) == 0
        out2 = str(tmp_path / "resumed")
        assert main(["pretrain", "--config", config_path, "--out", out2,
                     "--set", "epochs=4", "--set",
                     f'target.path={os.path.join(out, "target.bin")}',
                     "--resume", os.path.join(out, "checkpoint.bin")]) == 0
        rows = read_metrics(os.path.join(out2, "metrics.csv"))
        assert [int(r["epoch"]) for r in rows] == [2, 3]

    def test_collapse_exit_code(self, tmp_path, capsys):
        payload = dict(SMALL_CONFIG)
        payload["dataset"] = {"kind": "synthetic", "num_samples": 48, "sparse_dim": 4,
                              "dense_dim": 12, "signal": 0.0, "sparse_noise": 0.0,
                              "dense_noise": 0.0}
        payload["augment"] = {"dense_noise_scale": 0.0, "dense_dropout_prob": 0.0,
                              "scale_jitter": [1.0, 1.0]}
        payload["target"] = {"source": "identity"}
        path = tmp_path / "collapse.json.config"
        path.write_text(json.dumps(payload))
        out = str(tmp_path / "collapse_run")
        code = main(["pretrain", "--config", str(path), "--out", out])
        assert code == 4
        err = json.loads(capsys.readouterr().err)
        assert err["error"] == "numerical"
        assert os.path.exists(os.path.join(out, "collapse.json"))


class TestSweep:
    def test_lambda_sweep_writes_csv(self, config_path, tmp_path, capsys):
        out = str(tmp_path / "sweep")
        assert main(["sweep", "--config", config_path, "--out", out,
                     "--set", "target.source=identity",
                     "--axis", "lambda", "--values", "[0, 0.05]"]) == 0
        assert os.path.exists(os.path.join(out, "sweep.csv"))
        lines = open(os.path.join(out, "sweep.csv")).read().strip().split("\n")
        assert len(lines) == 3  # header + 2 rows

    def test_bad_values_config_error(self, config_path, capsys):
        assert main(["sweep", "--config", config_path, "--axis", "lambda",
                     "--values", "[]"]) == 2
