import json

import numpy as np
import pytest

from rgbdmass.cli import main
from rgbdmass.config import ExperimentConfig
from rgbdmass.dataset import read_manifest


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["corpus", "--out", str(root / "models"), "--count", "5", "--seed", "2"]) == 0
    assert (
        main(
            [
                "generate", "--models", str(root / "models"), "--out", str(root / "data"),
                "--views", "2", "--split", "0.9", "--seed", "4",
                "--width", "32", "--height", "32",
            ]
        )
        == 0
    )
    return root


def test_generate_writes_manifest(workspace):
    manifest = read_manifest(workspace / "data" / "manifest.jsonl")
    assert len(manifest.records) == 10
    manifest.validate(root=workspace / "data")


def test_train_and_eval_cli(workspace, capsys):
    config = ExperimentConfig(
        model_variant="pointnet",
        out_dir=str(workspace / "run"),
        synthetic_manifest=str(workspace / "data" / "manifest.jsonl"),
        test_manifest=str(workspace / "data" / "manifest.jsonl"),
        batch_size=4,
        epochs=1,
        num_points=64,
        image_size=16,
    )
    config.to_file(workspace / "config.txt")
    assert main(["train", "--config", str(workspace / "config.txt")]) == 0
    out = capsys.readouterr().out
    assert "best checkpoint" in out

    report_path = workspace / "report.json"
    assert (
        main(
            [
                "eval", "--checkpoint", str(workspace / "run" / "best.ckpt.npz"),
                "--manifest", str(workspace / "data" / "manifest.jsonl"),
                "--out", str(report_path),
            ]
        )
        == 0
    )
    report = json.loads(report_path.read_text())
    assert set(report) == {"alde", "ape", "mnre", "q", "n"}
    predictions = [
        json.loads(line)
        for line in (workspace / "report.predictions.jsonl").read_text().splitlines()
    ]
    assert len(predictions) == report["n"]
    assert all(p["mass_pred"] >= 0 for p in predictions)
    assert all(p["mass_true"] > 0 for p in predictions)


def test_metrics_cli(tmp_path, capsys):
    truth = [{"id": f"m{i}", "mass": float(i + 1)} for i in range(4)]
    pred = [{"id": f"m{i}", "mass": float(2 * (i + 1))} for i in range(4)]
    (tmp_path / "truth.jsonl").write_text("".join(json.dumps(r) + "\n" for r in truth))
    (tmp_path / "pred.jsonl").write_text("".join(json.dumps(r) + "\n" for r in pred))
    assert (
        main(["metrics", "--pred", str(tmp_path / "pred.jsonl"),
              "--truth", str(tmp_path / "truth.jsonl")])
        == 0
    )
    report = json.loads(capsys.readouterr().out.splitlines()[0])
    assert report["alde"] == pytest.approx(np.log(2.0))
    assert report["q"] == 1.0


def test_metrics_cli_no_overlap(tmp_path):
    (tmp_path / "truth.jsonl").write_text(json.dumps({"id": "a", "mass": 1.0}) + "\n")
    (tmp_path / "pred.jsonl").write_text(json.dumps({"id": "b", "mass": 1.0}) + "\n")
    assert (
        main(["metrics", "--pred", str(tmp_path / "pred.jsonl"),
              "--truth", str(tmp_path / "truth.jsonl")])
        == 1
    )
