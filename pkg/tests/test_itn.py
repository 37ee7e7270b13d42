import json
import logging
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.cnn import Dataset, LinearClassifier, normalize_pixels, save_weights
from src.diff_transformer import extend_square
from src.itn import (
    Branch,
    ControlVector,
    ItnBlocks,
    ItnConfig,
    StepLog,
    describe_spatial,
    displacement,
    evaluate_transformed,
    gate,
    itn_forward,
    itn_render,
    itn_train,
    load_blocks,
    loss_hat,
    loss_k,
    render_name,
    sample_unit_vectors,
    save_blocks,
    select_final_loss,
    smoothed_displacement,
    summary_grid,
    write_step_log,
)
from src.itn.blocks import blocks_from_tensors
from src.my_util.errors import ConfigurationError, DataFormatError, DomainError, ShapeError, UsageError
from src.my_util.my_io import manifest_path
from src.tensor_core import Tensor
from src.transforms import Image


def blocks_with_offsets(color_b2=None, spatial_b2=None, hidden: int = 2, **kwargs) -> ItnBlocks:
    """Blocks whose output layer is a constant offset from the identity."""
    tensors = {}
    for kind, size, b2 in (("color", 12, color_b2), ("spatial", 6, spatial_b2)):
        tensors |= {
            f"{kind}.w1": np.ones((2, hidden)),
            f"{kind}.b1": np.full(hidden, 0.1),
            f"{kind}.w2": np.zeros((hidden, size)),
            f"{kind}.b2": np.zeros(size) if b2 is None else np.asarray(b2, dtype=np.float64),
        }
    return blocks_from_tensors(tensors, **kwargs)


def identical_images(labels, side: int = 4, value: int = 120) -> Dataset:
    """Every image is the same, so a frozen model's accuracy is the share of its one predicted label."""
    pixels = np.full((len(labels), side, side, 3), value, dtype=np.uint8)
    return Dataset(pixels, labels, "train", ["0", "1"])


@pytest.fixture
def linear(rng):
    return LinearClassifier(rng.normal(0.0, 0.1, size=(48, 2)), np.zeros(2))


@pytest.fixture
def balanced():
    return identical_images([0, 1] * 4)


class TestControlVector:
    def test_domain(self):
        with pytest.raises(DomainError):
            ControlVector((0.0, 1.2), (0.0, 0.0))

    def test_label(self):
        assert ControlVector((0.0, 0.5), (1.0, 0.25)).label == "k1-0_0.5__k2-1_0.25"

    def test_sample_in_range(self, rng):
        for _ in range(20):
            k = ControlVector.sample(rng)
            assert all(0.0 <= x <= 1.0 for x in (*k.k1, *k.k2))


class TestBlocks:
    def test_fresh_blocks_emit_identity(self, rng):
        blocks = ItnBlocks.initialize(hidden=8, seed=3)
        for _ in range(5):
            color, spatial = blocks.maps(ControlVector.sample(rng))
            assert_array_equal(color.matrix.data, np.eye(3, 4))
            assert_array_equal(spatial.matrix.data, np.eye(2, 3))

    def test_swap_k(self):
        k = ControlVector((0.1, 0.2), (0.3, 0.4))
        assert ItnBlocks.initialize(4, 0).controls(k) == ((0.1, 0.2), (0.3, 0.4))
        assert ItnBlocks.initialize(4, 0, swap_k=True).controls(k) == ((0.3, 0.4), (0.1, 0.2))

    def test_clamp_warns_and_clips(self, caplog):
        blocks = blocks_with_offsets(spatial_b2=[20.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        with caplog.at_level(logging.WARNING, logger="src.itn.blocks"):
            _, spatial = blocks.maps(ControlVector())
        assert spatial.matrix.data[0, 0] == 10.0
        assert "clamping" in caplog.text

    def test_save_and_load(self, tmp_path, rng):
        blocks = blocks_with_offsets(spatial_b2=rng.normal(size=6), swap_k=True)
        path = tmp_path / "itn.iltf"
        save_blocks(blocks, path)
        loaded = load_blocks(path)
        assert loaded.swap_k
        for name, array in blocks.tensors().items():
            assert_array_equal(loaded.tensors()[name], array)

    def test_load_rejects_other_kind(self, tmp_path, tiny_weights):
        path = tmp_path / "cnn.iltf"
        save_weights(tiny_weights, path)
        with pytest.raises(DataFormatError):
            load_blocks(path)

    def test_load_rejects_edited_hidden(self, tmp_path):
        path = tmp_path / "itn.iltf"
        save_blocks(ItnBlocks.initialize(4, 0), path)
        manifest = json.loads(manifest_path(path).read_text())
        manifest["meta"]["hidden"] = 5
        manifest_path(path).write_text(json.dumps(manifest))
        with pytest.raises(DataFormatError, match="hidden"):
            load_blocks(path)


class TestLosses:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_loss_hat_of_double_scale(self, seed):
        s = sample_unit_vectors(3, 50, seed)
        assert loss_hat(np.diag([2.0, 2.0, 1.0]), s).item() == pytest.approx(-1.0, abs=1e-9)

    def test_loss_hat_of_identity(self):
        assert loss_hat(np.eye(4), sample_unit_vectors(4, 10, 0)).item() == 0.0

    def test_loss_hat_never_positive(self, rng):
        s = sample_unit_vectors(4, 16, rng)
        for _ in range(10):
            a_hat = np.vstack([rng.normal(size=(3, 4)), [0.0, 0.0, 0.0, 1.0]])
            assert loss_hat(a_hat, s).item() <= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            loss_hat(np.eye(4), sample_unit_vectors(3, 5, 0))

    def test_loss_k_scales_by_control_sum(self):
        s = sample_unit_vectors(3, 20, 0)
        assert loss_k((0.3, 0.2), np.diag([2.0, 2.0, 1.0]), s).item() == pytest.approx(-0.5, abs=1e-9)

    def test_displacement_of_double_scale(self):
        assert displacement(np.diag([2.0, 2.0, 1.0]), sample_unit_vectors(3, 30, 4)) == pytest.approx(1.0)

    def test_unit_vectors(self):
        s = sample_unit_vectors(4, 25, 9)
        assert s.vectors.shape == (25, 4)
        assert_array_equal(s.vectors[:, -1], np.ones(25))
        assert_allclose(np.linalg.norm(s.vectors[:, :3], axis=1), np.ones(25), atol=1e-12)

    @pytest.mark.parametrize("d, n", [(2, 5), (5, 5), (3, 0)])
    def test_unit_vector_arguments(self, d, n):
        with pytest.raises((ShapeError, UsageError)):
            sample_unit_vectors(d, n, 0)


class TestGate:
    def test_boundary(self):
        assert gate(0.79, 0.8) is Branch.ORIG
        assert gate(0.8, 0.8) is Branch.DISPLACEMENT

    def test_displacement_branch(self):
        cfg = ItnConfig(c_theta=2.0, acc_orig=0.5)
        final = select_final_loss(0.9, cfg, Tensor(3.0), Tensor(-0.5), Tensor(-1.0))
        assert final.item() == pytest.approx(-2.0)

    def test_orig_branch(self):
        cfg = ItnConfig(c_theta=2.0, acc_orig=0.5)
        assert select_final_loss(0.4, cfg, Tensor(3.0), Tensor(-0.5), Tensor(-1.0)).item() == 3.0

    def test_needs_resolved_threshold(self):
        with pytest.raises(UsageError):
            select_final_loss(0.9, ItnConfig(), Tensor(1.0), Tensor(0.0), Tensor(0.0))


class TestItnConfig:
    @pytest.mark.parametrize("field", ["c_theta", "s_size", "batch", "hidden"])
    def test_positive_fields(self, field):
        with pytest.raises(UsageError):
            ItnConfig(**{field: 0})

    def test_acc_orig_range(self):
        with pytest.raises(UsageError):
            ItnConfig(acc_orig=1.5)

    def test_from_defaults_ignores_none(self):
        cfg = ItnConfig.from_defaults(steps=7, lr=None)
        assert cfg.steps == 7
        assert cfg.lr == 1e-3
        assert cfg.s_size == 16


class TestForward:
    def test_identity_blocks_leave_logits_unchanged(self, linear, rng):
        img = Tensor(rng.uniform(size=(2, 3, 4, 4)))
        out = itn_forward(img, ControlVector.sample(rng), ItnBlocks.initialize(4, 0), linear)
        assert_allclose(out.logits.data, linear.logits(img).data, atol=1e-8)

    def test_colour_is_applied_before_the_warp(self, linear, rng):
        color_b2 = np.zeros(12)
        color_b2[[3, 7, 11]] = 0.5
        spatial_b2 = [0.0, 0.0, 5.0, 0.0, 0.0, 0.0]
        blocks = blocks_with_offsets(color_b2, spatial_b2)
        out = itn_forward(Tensor(rng.uniform(size=(1, 3, 4, 4))), ControlVector(), blocks, linear)
        # the bias brightens only in-domain samples; a shift off the grid leaves nothing to brighten
        assert_array_equal(out.image.data, np.zeros((1, 3, 4, 4)))


class TestItnTrain:
    def config(self, **kwargs) -> ItnConfig:
        values = dict(steps=3, batch=4, s_size=8, hidden=2, lr=0.01, seed=5, log_every=1)
        return ItnConfig(**(values | kwargs))

    def test_log_follows_the_gate(self, linear, balanced):
        result = itn_train(self.config(acc_orig=0.5), linear, balanced)
        assert len(result.log) == 3
        assert [e.step for e in result.log] == [0, 1, 2]
        for entry in result.log:
            assert entry.branch is gate(entry.batch_acc, 0.5)

    def test_acc_orig_defaults_below_clean_accuracy(self, linear, balanced):
        result = itn_train(self.config(steps=1), linear, balanced)
        assert result.clean_accuracy == 0.5
        assert result.config.acc_orig == pytest.approx(0.48)

    def test_unreachable_acc_orig(self, linear, balanced):
        with pytest.raises(ConfigurationError):
            itn_train(self.config(acc_orig=0.9), linear, balanced)

    def test_empty_dataset(self, linear):
        with pytest.raises(UsageError):
            itn_train(self.config(), linear, identical_images([]))

    def test_deterministic(self, linear, balanced):
        a = itn_train(self.config(acc_orig=0.0), linear, balanced, blocks=blocks_with_offsets(spatial_b2=[0, 0, 0.05, 0, 0, 0.05]))
        b = itn_train(self.config(acc_orig=0.0), linear, balanced, blocks=blocks_with_offsets(spatial_b2=[0, 0, 0.05, 0, 0, 0.05]))
        for name, array in a.blocks.tensors().items():
            assert_array_equal(b.blocks.tensors()[name], array)
        assert [e.loss_spatial for e in a.log] == [e.loss_spatial for e in b.log]

    def test_displacement_step_moves_away_from_identity(self, linear, balanced):
        blocks = blocks_with_offsets(spatial_b2=[0.0, 0.0, 0.05, 0.0, 0.0, 0.05])
        before = np.linalg.norm(blocks.spatial.params["b2"].data)
        result = itn_train(self.config(acc_orig=0.0, steps=1), linear, balanced, blocks=blocks)
        assert result.log[0].branch is Branch.DISPLACEMENT
        assert np.linalg.norm(result.blocks.spatial.params["b2"].data) > before
        # a map sitting exactly on the identity has no displacement gradient
        assert_array_equal(result.blocks.color.params["b2"].data, np.zeros(12))

    def test_zero_steps_leave_the_blocks_alone(self, linear, balanced):
        blocks = blocks_with_offsets(spatial_b2=[0.0, 0.0, 0.05, 0.0, 0.0, 0.05])
        before = blocks.tensors()
        result = itn_train(self.config(acc_orig=0.0, steps=0), linear, balanced, blocks=blocks)
        assert result.log == []
        assert result.blocks.tensors().keys() == before.keys()
        for name, array in before.items():
            assert_array_equal(result.blocks.tensors()[name], array)

    def test_warns_when_stuck_at_the_identity(self, linear, balanced, caplog):
        with caplog.at_level(logging.WARNING, logger="src.itn.train"):
            result = itn_train(self.config(acc_orig=0.0), linear, balanced)
        assert all(e.branch is Branch.DISPLACEMENT for e in result.log)
        assert result.blocks.emits_identity
        assert "still the identity" in caplog.text

    def test_fresh_blocks_start_at_clean_accuracy(self, linear, balanced):
        result = itn_train(self.config(acc_orig=0.0, steps=1), linear, balanced)
        assert result.initial_accuracy == result.clean_accuracy == 0.5

    def test_no_identity_warning_once_the_maps_move(self, linear, balanced, caplog):
        blocks = blocks_with_offsets(spatial_b2=[0.0, 0.0, 0.05, 0.0, 0.0, 0.05])
        with caplog.at_level(logging.WARNING, logger="src.itn.train"):
            itn_train(self.config(acc_orig=0.0), linear, balanced, blocks=blocks)
        assert "still the identity" not in caplog.text

    def test_smoothed_displacement(self):
        log = [StepLog(i, Branch.DISPLACEMENT, 0.0, -0.1 * i, -1.0 * i, 1.0) for i in range(20)]
        first, last = smoothed_displacement(log, c_theta=10.0)
        assert first == pytest.approx(np.mean([-2.0 * i for i in (0, 1)]))
        assert last == pytest.approx(np.mean([-2.0 * i for i in (18, 19)]))
        with pytest.raises(UsageError):
            smoothed_displacement([], 10.0)

    def test_write_step_log(self, tmp_path):
        path = tmp_path / "train_log.csv"
        write_step_log(path, [StepLog(0, Branch.ORIG, 0.7, -0.1, -0.2, 0.25)])
        lines = path.read_text().splitlines()
        assert lines[0] == "step,branch,loss_orig,loss_color,loss_spatial,batch_acc"
        assert lines[1] == "0,orig,0.7,-0.1,-0.2,0.25"


class TestMeasurements:
    def test_identity_blocks_keep_clean_predictions(self, linear, rng):
        pixels = rng.integers(0, 256, size=(6, 4, 4, 3)).astype(np.uint8)
        data = Dataset(pixels, [0, 1, 0, 1, 1, 0], "test", ["0", "1"])
        clean = linear.logits(Tensor(normalize_pixels(pixels))).data.argmax(axis=1)
        ev = evaluate_transformed(ItnBlocks.initialize(4, 0), linear, data, ControlVector((1.0, 1.0), (0.5, 0.5)), s_size=20)
        assert ev.accuracy == pytest.approx(np.mean(clean == data.labels))
        assert ev.agreement == 1.0
        assert ev.displacement_color == 0.0 and ev.displacement_spatial == 0.0
        assert ev.to_dict()["k1"] == [1.0, 1.0]

    def test_describe_spatial(self):
        c, s = 2 * math.cos(math.radians(30)), 2 * math.sin(math.radians(30))
        summary = describe_spatial(np.array([[c, -s, 0.1], [s, c, -0.2]]))
        assert summary.rotation_deg == pytest.approx(30.0)
        assert summary.scale_x == pytest.approx(2.0)
        assert summary.scale_y == pytest.approx(2.0)
        assert (summary.shift_x, summary.shift_y) == (0.1, -0.2)

    def test_summary_grid(self):
        grid = summary_grid([0.0, 0.5, 1.0])
        assert len(grid) == 81
        assert len(set(grid)) == 81

    def test_displacement_of_extended_map(self):
        _, spatial = blocks_with_offsets(spatial_b2=[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).maps(ControlVector())
        assert displacement(extend_square(spatial), sample_unit_vectors(3, 40, 1)) == pytest.approx(1.0)


class TestRender:
    def test_files_and_predictions(self, tmp_path, linear, rng):
        images = [Image(rng.integers(0, 256, size=(4, 4, 3)).astype(np.float64)) for _ in range(2)]
        k_grid = [ControlVector(), ControlVector((1.0, 1.0), (1.0, 1.0))]
        csv_path = itn_render(ItnBlocks.initialize(4, 0), linear, images, k_grid, tmp_path / "render")
        rows = csv_path.read_text().splitlines()
        assert rows[0] == "k1_0,k1_1,k2_0,k2_1,image,predicted,softmax,clean_predicted"
        assert len(rows) == 1 + 4
        assert len(list((tmp_path / "render").glob("*.ppm"))) == 4

        assert render_name(ControlVector(), 1) == "k1-0_0__k2-0_0__1.ppm"
        restored = Image.read_ppm(tmp_path / "render" / render_name(ControlVector(), 1))
        assert np.abs(restored.pixels - images[1].pixels).max() <= 1.0

    def test_mixed_sizes(self, tmp_path, linear):
        images = [Image(np.zeros((4, 4, 3))), Image(np.zeros((5, 5, 3)))]
        with pytest.raises(ShapeError):
            itn_render(ItnBlocks.initialize(4, 0), linear, images, [ControlVector()], tmp_path)
