import pytest

from pyhub.polarocc.pipeline import ParamStore, gradcheck_all, tiny_config
from pyhub.polarocc.pipeline import model as model_module


@pytest.fixture(scope="module")
def report():
    return gradcheck_all(seed=0)


class TestGradcheck:
    def test_fresh_params_pass(self, report):
        failures = [(e.module, e.target, e.error) for e in report.failures()]
        assert report.passed, failures

    def test_every_parameter_listed_once(self, report):
        names = ParamStore.initialize(tiny_config(0)).names()
        assert sorted(report.param_targets()) == sorted(names)
        assert len(report.param_targets()) == len(set(report.param_targets()))

    def test_module_errors(self, report):
        modules = report.module_errors()
        for module in ("conv3d", "pdconv", "fusion", "grp", "sampler", "head", "loss", "pipeline"):
            assert modules[module] <= report.tolerance
        assert report.to_dict()["passed"] is True

    def test_tiny_config(self):
        cfg = tiny_config(0)
        assert cfg.working_spec().bins == (4, 4, 2)
        assert cfg.channels == 3
        assert cfg.fused()


def test_planted_sign_flip_is_detected(monkeypatch):
    original = model_module.fuse_backward

    def flipped(cache, params, grad):
        grad_l, grad_c, grads = original(cache, params, grad)
        grads["gate_proj"] = -grads["gate_proj"]
        return grad_l, grad_c, grads

    monkeypatch.setattr(model_module, "fuse_backward", flipped)
    report = gradcheck_all(seed=0)
    assert not report.passed
    assert [e.target for e in report.failures()] == ["fusion.gate_proj"]
