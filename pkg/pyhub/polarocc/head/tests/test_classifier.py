import math

import numpy as np
import pytest

from pyhub.polarocc.core.exceptions import ConfigError, DataError, DimensionError
from pyhub.polarocc.geometry import CartesianGridSpec
from pyhub.polarocc.head import (
    HeadParams,
    SemanticGrid,
    classify,
    cross_entropy_loss,
    dumps_semantic,
    head_backward,
    head_logits,
    load_semantic,
    loads_semantic,
    save_semantic,
)
from pyhub.polarocc.tensor import finite_diff_grad, relative_error
from pyhub.polarocc.voxelize import FeatureVolume

SPEC = CartesianGridSpec(x_range=(-2, 2), y_range=(-2, 2), z_range=(0, 1), bins=(2, 3, 2))


class TestClassify:
    def test_zero_params_pick_free(self):
        logits, grid = classify(FeatureVolume(SPEC, np.zeros((2, 3, 2, 4))), HeadParams.zeros(4, 5))
        assert not logits.any()
        assert not grid.labels.any()

    def test_one_hot_identity(self):
        hot = np.array([[[2, 0], [1, 3], [0, 0]], [[3, 3], [2, 1], [1, 2]]])
        features = np.eye(4)[hot]
        _, grid = classify(FeatureVolume(SPEC, features), HeadParams(np.eye(4), np.zeros(4)))
        np.testing.assert_array_equal(grid.labels, hot)

    def test_loop_oracle(self, rng):
        params = HeadParams(rng.normal(size=(3, 5)), rng.normal(size=5))
        features = rng.normal(size=(2, 3, 2, 3))
        logits, grid = classify(FeatureVolume(SPEC, features), params)
        for index in np.ndindex(2, 3, 2):
            row = [features[index] @ params.classifier[:, k] + params.bias[k] for k in range(5)]
            np.testing.assert_allclose(logits[index], row, rtol=0, atol=1e-12)
            assert grid.labels[index] == int(np.argmax(row))

    def test_labels_invariant_to_logit_shift(self, rng):
        params = HeadParams(rng.normal(size=(3, 5)), rng.normal(size=5))
        features = FeatureVolume(SPEC, rng.normal(size=(2, 3, 2, 3)))
        _, grid = classify(features, params)
        shifted = HeadParams(params.classifier, params.bias + 7.0)
        np.testing.assert_array_equal(classify(features, shifted)[1].labels, grid.labels)

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            classify(FeatureVolume(SPEC, np.zeros((2, 3, 2, 3))), HeadParams.zeros(4, 5))

    def test_head_backward(self, rng):
        params = HeadParams(rng.normal(size=(3, 4)), rng.normal(size=4))
        features = rng.normal(size=(2, 3, 2, 3))
        g = rng.normal(size=(2, 3, 2, 4))
        grad_f, grads = head_backward(features, params, g)
        assert relative_error(
            grad_f, finite_diff_grad(lambda t: np.sum(head_logits(t, params) * g), features, h=1e-6)
        ) <= 1e-4
        numeric = finite_diff_grad(
            lambda t: np.sum(head_logits(features, HeadParams(t, params.bias)) * g), params.classifier, h=1e-6
        )
        assert relative_error(grads["classifier"], numeric) <= 1e-4
        np.testing.assert_allclose(grads["bias"], g.reshape(-1, 4).sum(axis=0))


class TestCrossEntropy:
    def test_uniform_logits(self):
        target = SemanticGrid(SPEC, np.arange(12).reshape(2, 3, 2) % 17, 17)
        loss, _ = cross_entropy_loss(np.zeros((2, 3, 2, 17)), target)
        assert loss == pytest.approx(math.log(17), abs=1e-12)

    def test_confident_logits(self):
        labels = np.arange(12).reshape(2, 3, 2) % 4
        target = SemanticGrid(SPEC, labels, 4)
        logits = 100.0 * np.eye(4)[labels]
        loss, _ = cross_entropy_loss(logits, target)
        assert loss < 1e-30

    def test_class_weights(self):
        labels = np.zeros((2, 3, 2), dtype=int)
        labels[0] = 1
        target = SemanticGrid(SPEC, labels, 2)
        loss, _ = cross_entropy_loss(np.zeros((2, 3, 2, 2)), target, class_weights=[0.0, 1.0])
        assert loss == pytest.approx(0.5 * math.log(2), abs=1e-12)

    def test_gradcheck(self, rng):
        target = SemanticGrid(SPEC, rng.integers(0, 5, (2, 3, 2)), 5)
        logits = rng.normal(size=(2, 3, 2, 5))
        weights = rng.uniform(0.1, 2.0, 5)
        _, grad = cross_entropy_loss(logits, target, weights)
        numeric = finite_diff_grad(lambda t: cross_entropy_loss(t, target, weights)[0], logits, h=1e-6)
        assert relative_error(grad, numeric) <= 1e-4

    def test_label_out_of_range(self):
        with pytest.raises(DataError):
            SemanticGrid(SPEC, np.full((2, 3, 2), 5), 5)

    def test_class_count_mismatch(self):
        with pytest.raises(DataError):
            cross_entropy_loss(np.zeros((2, 3, 2, 4)), SemanticGrid(SPEC, np.zeros((2, 3, 2), dtype=int), 5))

    def test_negative_weight(self):
        with pytest.raises(ConfigError):
            cross_entropy_loss(
                np.zeros((2, 3, 2, 2)), SemanticGrid(SPEC, np.zeros((2, 3, 2), dtype=int), 2), class_weights=[1, -1]
            )


class TestSemanticFile:
    def test_save_and_load(self, tmp_path, rng):
        grid = SemanticGrid(SPEC, rng.integers(0, 17, (2, 3, 2)), 17)
        path = tmp_path / "pred.pvosem"
        save_semantic(path, grid)
        loaded = load_semantic(path, SPEC)
        np.testing.assert_array_equal(loaded.labels, grid.labels)
        assert loaded.n_classes == 17
        assert path.read_bytes()[:7] == b"PVOSEM1"
        assert len(path.read_bytes()) == 7 + 16 + 2 * 12

    def test_summary_counts(self):
        labels = np.zeros((2, 3, 2), dtype=int)
        labels[0, 0, 0] = 3
        summary = SemanticGrid(SPEC, labels, 4).summary()
        assert summary["class_counts"] == [11, 0, 0, 1]
        assert summary["n_occupied"] == 1

    def test_bad_magic(self):
        with pytest.raises(DataError):
            loads_semantic(b"PVOARR1" + bytes(16), SPEC)

    def test_extent_mismatch(self):
        other = CartesianGridSpec(x_range=(-2, 2), y_range=(-2, 2), z_range=(0, 1), bins=(2, 2, 2))
        data = dumps_semantic(SemanticGrid(other, np.zeros((2, 2, 2), dtype=int), 3))
        with pytest.raises(DataError):
            loads_semantic(data, SPEC)

    def test_truncated_payload(self):
        data = dumps_semantic(SemanticGrid(SPEC, np.zeros((2, 3, 2), dtype=int), 3))
        with pytest.raises(DataError):
            loads_semantic(data[:-1], SPEC)
