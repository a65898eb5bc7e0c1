import numpy as np
import pytest

from pyhub.polarocc.core.exceptions import ConfigError, DimensionError
from pyhub.polarocc.head import SemanticGrid
from pyhub.polarocc.pipeline import (
    ModelInputs,
    ParamStore,
    build_sample,
    config_from_dict,
    forward,
    forward_features,
    loss_and_grads,
    loss_value,
    prepare_inputs,
)
from pyhub.polarocc.tensor import finite_diff_grad, relative_error
from pyhub.polarocc.voxelize import PointCloud

LIDAR = {"n_beams": 8, "points_per_beam": 90}


def tiny(**extra):
    return config_from_dict({"grid": {"preset": "tiny"}, "channels": 3, "lidar": LIDAR, **extra})


class TestForward:
    def test_empty_cloud_is_bias_driven(self):
        cfg = tiny()
        params = ParamStore.initialize(cfg)
        logits, labels = forward(cfg, PointCloud.empty(), None, params)
        np.testing.assert_array_equal(logits, np.broadcast_to(params.value("head.bias"), logits.shape))
        assert np.all(labels.labels == labels.labels.flat[0])

    def test_desk_shape_contract(self):
        cfg = config_from_dict({"lidar": LIDAR})
        sample = build_sample(cfg, seed=0)
        logits, labels = forward(cfg, sample.cloud, None, ParamStore.initialize(cfg))
        assert logits.shape == (64, 64, 10, 8)
        assert labels.labels.shape == (64, 64, 10)

    def test_deterministic(self):
        cfg = tiny()
        sample = build_sample(cfg, seed=1)
        params = ParamStore.initialize(cfg)
        a = forward(cfg, sample.cloud, None, params)[0]
        b = forward(cfg, sample.cloud, None, params)[0]
        np.testing.assert_array_equal(a, b)

    def test_grp_toggle_changes_output(self):
        cfg = tiny()
        sample = build_sample(cfg, seed=1)
        params = ParamStore.initialize(cfg)
        no_grp = cfg.variant(**{"grp.enable": False})
        # grp 를 끄면 grp.* 만 빠지고 나머지 텐서는 같은 값을 공유
        shared = ParamStore.initialize(no_grp)
        for name in shared:
            shared.value(name)[...] = params.value(name)
        with_grp = forward(cfg, sample.cloud, None, params)[0]
        without = forward(no_grp, sample.cloud, None, shared)[0]
        assert not np.array_equal(with_grp, without)

    def test_cartesian_baseline_runs(self):
        cfg = tiny(polar=False)
        sample = build_sample(cfg, seed=2)
        logits, _ = forward(cfg, sample.cloud, None, ParamStore.initialize(cfg))
        assert logits.shape == (4, 4, 2, 8)

    def test_fused_needs_camera(self):
        cfg = tiny(fusion={"mode": "fused"})
        with pytest.raises(ConfigError):
            forward(cfg, PointCloud.empty(), None, ParamStore.initialize(cfg))

    def test_fused_forward(self):
        cfg = tiny(fusion={"mode": "fused"})
        sample = build_sample(cfg, seed=3)
        assert sample.camera is not None
        logits, labels = forward(cfg, sample.cloud, sample.camera, ParamStore.initialize(cfg))
        assert np.all(np.isfinite(logits))
        assert labels.n_classes == 8

    def test_input_shape_mismatch(self):
        cfg = tiny()
        inputs = ModelInputs(x0=np.zeros((3, 4, 2, 10)), mask=np.ones((3, 4, 2), dtype=bool))
        with pytest.raises(DimensionError):
            forward_features(cfg, ParamStore.initialize(cfg), inputs)


class TestGradients:
    def test_every_parameter_gets_a_gradient(self):
        cfg = tiny(fusion={"mode": "fused"})
        sample = build_sample(cfg, seed=0)
        params = ParamStore.initialize(cfg)
        loss, grads = loss_and_grads(cfg, params, sample.inputs, sample.truth)
        assert np.isfinite(loss)
        assert sorted(grads) == sorted(params.names())
        for name in params:
            assert grads[name].shape == params[name].shape

    @pytest.mark.parametrize("name", ["head.bias", "stem.b", "grp.reverse.w_v"])
    def test_matches_finite_differences(self, rng, name):
        cfg = tiny()
        params = ParamStore.initialize(cfg)
        bins = cfg.working_spec().bins
        inputs = ModelInputs(x0=rng.normal(size=bins + (10,)), mask=np.ones(bins, dtype=bool))
        out = cfg.output_spec()
        target = SemanticGrid(out, rng.integers(0, 8, size=out.bins), 8)
        _, grads = loss_and_grads(cfg, params, inputs, target)
        value = params.value(name)
        original = value.copy()

        def f(v):
            value[...] = v
            return loss_value(cfg, params, inputs, target)

        numeric = finite_diff_grad(f, original, h=1e-6)
        value[...] = original
        assert relative_error(grads[name], numeric) <= 1e-4

    def test_prepare_inputs_masks_empty_voxels(self):
        cfg = tiny()
        sample = build_sample(cfg, seed=0)
        inputs = prepare_inputs(cfg, sample.cloud)
        assert inputs.mask.any()
        assert np.all(inputs.x0[~inputs.mask] == 0)
