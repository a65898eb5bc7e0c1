import numpy as np
import pytest

from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.pipeline import GRP_MODULES, ParamStore, config_from_dict, param_layout


def tiny(**extra):
    return config_from_dict({"grid": {"preset": "tiny"}, "channels": 3, **extra})


class TestLayout:
    def test_names_are_unique_and_ordered(self):
        names = list(param_layout(tiny(fusion={"mode": "fused"})))
        assert len(names) == len(set(names))
        assert names[:2] == ["stem.w", "stem.b"]
        assert names[2:5] == ["fusion.gate_kernel", "fusion.gate_proj", "fusion.gate_bias"]
        assert names[-2:] == ["head.classifier", "head.bias"]

    def test_lidar_only_has_no_fusion(self):
        assert not any(name.startswith("fusion.") for name in param_layout(tiny()))

    def test_grp_toggle(self):
        on = [n for n in param_layout(tiny()) if n.startswith("grp.")]
        off = [n for n in param_layout(tiny(grp={"enable": False})) if n.startswith("grp.")]
        assert len(on) == 4 * len(GRP_MODULES)
        assert off == []

    @pytest.mark.parametrize("enable, kernels", [(True, ["r", "a", "z"]), (False, ["full"])])
    def test_backbone_kernels(self, enable, kernels):
        layout = param_layout(tiny(pdconv={"enable": enable}))
        assert [n.split(".")[-1] for n in layout if n.startswith("backbone.0.")] == kernels

    def test_shapes_and_fan_in(self):
        layout = param_layout(tiny())
        assert layout["stem.w"].shape == (1, 1, 1, 10, 3)
        assert layout["stem.w"].fan_in == 10
        assert layout["backbone.0.r"].shape == (1, 3, 3, 3, 3)
        assert layout["backbone.0.r"].fan_in == 27
        assert layout["head.classifier"].shape == (3, 8)
        assert layout["head.bias"].fan_in == 3


class TestInitialize:
    def test_uniform_bounds(self):
        cfg = tiny()
        store = ParamStore.initialize(cfg)
        for name, slot in param_layout(cfg).items():
            bound = 1.0 / np.sqrt(slot.fan_in)
            assert np.all(np.abs(store.value(name)) <= bound)
            assert np.all(store[name].grad == 0)

    def test_seeded(self):
        cfg = tiny()
        a, b = ParamStore.initialize(cfg, seed=3), ParamStore.initialize(cfg, seed=3)
        c = ParamStore.initialize(cfg, seed=4)
        assert all(np.array_equal(a.value(n), b.value(n)) for n in a)
        assert not np.array_equal(a.value("stem.w"), c.value("stem.w"))

    def test_builders_return_views(self):
        cfg = tiny(fusion={"mode": "fused"})
        store = ParamStore.initialize(cfg)
        head, grp, fusion = store.head(), store.grp(cfg), store.fusion()
        stages = store.backbone(cfg)
        store.value("head.bias")[:] = 5.0
        store.value("grp.axial.a.w_q")[:] = 2.0
        store.value("fusion.gate_bias")[:] = -1.0
        store.value("backbone.0.z")[:] = 0.5
        assert np.all(head.bias == 5.0)
        assert np.all(grp.axial["a"].w_q == 2.0)
        assert fusion.gate_bias[0] == -1.0
        assert np.all(stages[0].kernels.k_z == 0.5)

    def test_grad_norm(self):
        store = ParamStore.zeros(tiny())
        store.accumulate("head.bias", np.full(8, 0.5))
        assert store.grad_norm() == pytest.approx(np.sqrt(8 * 0.25))
        store.zero_grad()
        assert store.grad_norm() == 0.0


class TestCheckpoint:
    def test_save_load(self, tmp_path):
        cfg = tiny()
        store = ParamStore.initialize(cfg)
        path, names_path = store.save(tmp_path / "params.bin")
        assert names_path.name == "params.bin.names.json"
        loaded = ParamStore.load(path, cfg)
        assert loaded.names() == store.names()
        for name in store:
            np.testing.assert_array_equal(loaded.value(name), store.value(name))

    def test_load_against_other_config(self, tmp_path):
        path, _ = ParamStore.initialize(tiny()).save(tmp_path / "params.bin")
        with pytest.raises(DataError, match="missing"):
            ParamStore.load(path, tiny(fusion={"mode": "fused"}))

    def test_truncated_manifest(self, tmp_path):
        path, names_path = ParamStore.initialize(tiny()).save(tmp_path / "params.bin")
        names_path.write_text('["stem.w"]')
        with pytest.raises(DataError):
            ParamStore.load(path)
