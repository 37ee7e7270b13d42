import json

import numpy as np
import pytest

from main import EXIT_DATA, EXIT_OK, EXIT_USAGE, dispatch
from src.verification import GradCheckReport

from .conftest import digit_like, idx_images_bytes, idx_labels_bytes


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """IDX data and a CNN trained on it for one epoch, shared by the end-to-end tests."""
    root = tmp_path_factory.mktemp("cli")
    data = root / "mnist"
    data.mkdir()
    rng = np.random.default_rng(77)
    for prefix, labels in (("train", np.array([0, 1, 2, 3] * 4)), ("t10k", np.array([0, 1, 2, 3, 0, 0]))):
        (data / f"{prefix}-images-idx3-ubyte").write_bytes(idx_images_bytes(digit_like(rng, labels)))
        (data / f"{prefix}-labels-idx1-ubyte").write_bytes(idx_labels_bytes(labels))

    weights = root / "cnn.iltf"
    code = dispatch(["train-cnn", "--data", str(data), "--epochs", "1", "--batch", "8", "--out", str(weights)])
    assert code == EXIT_OK
    return root, data, weights


class TestExitCodes:
    def test_missing_required_option(self, tmp_path):
        assert dispatch(["sweep", "--kind", "rotate", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_unknown_kind(self, tmp_path):
        args = ["sweep", "--weights", str(tmp_path / "w.iltf"), "--kind", "shear", "--data", str(tmp_path), "--out", str(tmp_path / "o")]
        assert dispatch(args) == EXIT_USAGE

    def test_data_dir_required(self, tmp_path, monkeypatch):
        monkeypatch.delenv("INVARIANCE_DATA_DIR", raising=False)
        assert dispatch(["train-cnn", "--out", str(tmp_path / "cnn.iltf")]) == EXIT_USAGE

    def test_missing_weights_file(self, tmp_path):
        args = ["sweep", "--weights", str(tmp_path / "absent.iltf"), "--kind", "rotate", "--data", str(tmp_path), "--out", str(tmp_path / "o")]
        assert dispatch(args) == EXIT_DATA

    def test_bad_acc_orig(self, tmp_path):
        args = ["itn-train", "--weights", str(tmp_path / "w.iltf"), "--data", str(tmp_path), "--acc-orig", "high", "--out", str(tmp_path)]
        assert dispatch(args) == EXIT_USAGE

    def test_corrupt_weights(self, tmp_path):
        weights = tmp_path / "w.iltf"
        weights.write_bytes(b"ILTF")
        (tmp_path / "w.iltf.json").write_text("{broken")
        args = ["sweep", "--weights", str(weights), "--kind", "rotate", "--data", str(tmp_path), "--out", str(tmp_path / "o")]
        assert dispatch(args) == EXIT_DATA


class TestGradcheck:
    def test_passing_suite(self, tmp_path, monkeypatch):
        monkeypatch.setattr("src.launcher.run_gradcheck_suite", lambda seed: [GradCheckReport("matmul", 1e-9)])
        assert dispatch(["gradcheck", "--out", str(tmp_path)]) == EXIT_OK
        manifest = json.loads((tmp_path / "run.json").read_text())
        assert manifest["results"] == {"checks": 1, "failed": 0}

    def test_failing_suite(self, tmp_path, monkeypatch):
        reports = [GradCheckReport("matmul", 1e-9), GradCheckReport("conv2d", 0.4, failing=(0, 1))]
        monkeypatch.setattr("src.launcher.run_gradcheck_suite", lambda seed: reports)
        assert dispatch(["gradcheck", "--out", str(tmp_path)]) == EXIT_USAGE


class TestEndToEnd:
    def test_train_manifest(self, workspace):
        _, _, weights = workspace
        run = json.loads((weights.parent / "cnn.iltf.run.json").read_text())
        assert run["command"] == "train-cnn"
        assert 0.0 <= run["results"]["test_accuracy"] <= 1.0
        assert (weights.parent / "cnn.iltf.json").exists()

    def test_noise_sweep_and_replay(self, workspace):
        root, data, weights = workspace
        out = root / "noise"
        args = ["sweep", "--weights", str(weights), "--data", str(data), "--class", "0", "--kind", "gaussian_noise"]
        assert dispatch([*args, "--grid", "0:0.2:3", "--seed", "3", "--out", str(out)]) == EXIT_OK

        lines = (out / "gaussian_noise.csv").read_text().splitlines()
        assert len(lines) == 4
        assert lines[0].endswith(",others,accuracy")
        sidecar = json.loads((out / "gaussian_noise.json").read_text())
        assert sidecar["n_images"] == 3
        assert sidecar["seed"] == 3

        before = (out / "gaussian_noise.csv").read_bytes()
        assert dispatch(["replay", str(out / "run.json")]) == EXIT_OK
        assert (out / "gaussian_noise.csv").read_bytes() == before

    def test_two_sided_rotation(self, workspace):
        root, data, weights = workspace
        out = root / "rotate"
        args = ["sweep", "--weights", str(weights), "--data", str(data), "--class", "1", "--kind", "rotate", "--grid", "-90:90:3"]
        assert dispatch([*args, "--out", str(out)]) == EXIT_OK
        assert (out / "rotate_neg.csv").exists() and (out / "rotate_pos.csv").exists()
        run = json.loads((out / "run.json").read_text())
        assert set(run["results"]["thresholds"]) == {"rotate_neg", "rotate_pos"}

    def test_class_out_of_range(self, workspace, tmp_path):
        _, data, weights = workspace
        args = ["sweep", "--weights", str(weights), "--data", str(data), "--class", "10", "--kind", "rotate", "--out", str(tmp_path)]
        assert dispatch(args) == EXIT_USAGE

    def test_itn_train_and_render(self, workspace):
        root, data, weights = workspace
        itn = root / "itn"
        args = ["itn-train", "--weights", str(weights), "--data", str(data), "--steps", "2", "--batch", "4"]
        assert dispatch([*args, "--s-size", "4", "--hidden", "4", "--acc-orig", "0", "--out", str(itn)]) == EXIT_OK

        assert len((itn / "train_log.csv").read_text().splitlines()) == 3
        summary = json.loads((itn / "summary.json").read_text())
        assert len(summary["per_k"]) == 81
        assert summary["acc_orig"] == 0.0
        assert summary["initial_accuracy"] == summary["clean_accuracy"]
        assert "first_10pct" in summary["displacement_loss"]

        render = root / "render"
        args = ["itn-render", "--weights", str(weights), "--blocks", str(itn / "blocks.iltf"), "--images", str(data)]
        assert dispatch([*args, "--format", "idx", "--count", "2", "--k-grid", "axes:1", "--out", str(render)]) == EXIT_OK
        assert len(list(render.glob("*.ppm"))) == 10
        assert len((render / "predictions.csv").read_text().splitlines()) == 11


def snapshot(*paths):
    return {p.name: p.read_bytes() for p in paths}


class TestReplayDeterminism:
    def test_train_cnn_weights(self, workspace, tmp_path):
        _, data, _ = workspace
        weights = tmp_path / "cnn.iltf"
        args = ["train-cnn", "--data", str(data), "--epochs", "1", "--batch", "8", "--seed", "11", "--out", str(weights)]
        assert dispatch(args) == EXIT_OK
        outputs = (weights, tmp_path / "cnn.iltf.json")
        before = snapshot(*outputs)

        assert dispatch(["replay", str(tmp_path / "cnn.iltf.run.json")]) == EXIT_OK
        assert snapshot(*outputs) == before

    def test_itn_blocks_and_log(self, workspace, tmp_path):
        _, data, weights = workspace
        itn = tmp_path / "itn"
        args = ["itn-train", "--weights", str(weights), "--data", str(data), "--steps", "3", "--batch", "4"]
        assert dispatch([*args, "--s-size", "4", "--hidden", "4", "--acc-orig", "0", "--seed", "8", "--out", str(itn)]) == EXIT_OK
        outputs = (itn / "blocks.iltf", itn / "blocks.iltf.json", itn / "train_log.csv", itn / "summary.json")
        before = snapshot(*outputs)

        assert dispatch(["replay", str(itn / "run.json")]) == EXIT_OK
        assert snapshot(*outputs) == before
