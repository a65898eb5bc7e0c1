import json

import numpy as np
import pytest

from pyhub.polarocc.core.exceptions import DataError, TrainingError
from pyhub.polarocc.pipeline import ParamStore, build_dataset, config_from_dict, train
from pyhub.polarocc.pipeline import trainer as trainer_module

LIDAR = {"n_beams": 8, "points_per_beam": 90}


def tiny(**extra):
    return config_from_dict({"grid": {"preset": "tiny"}, "channels": 3, "lidar": LIDAR, **extra})


@pytest.fixture
def samples():
    return build_dataset(tiny(), [0, 1])


class TestTrain:
    def test_zero_step_size_leaves_params_unchanged(self, samples):
        cfg = tiny(train={"lr": 0.0})
        params = ParamStore.initialize(cfg)
        before = params.snapshot()
        train(cfg, samples, params, steps=3)
        for name, value in before.items():
            assert np.array_equal(params.value(name), value)

    def test_same_seed_same_log(self, samples):
        cfg = tiny()
        a = train(cfg, samples, ParamStore.initialize(cfg), steps=4)
        b = train(cfg, samples, ParamStore.initialize(cfg), steps=4)
        assert a.to_jsonl() == b.to_jsonl()

    def test_cycles_scenes_in_order(self, samples):
        cfg = tiny()
        log = train(cfg, samples, ParamStore.initialize(cfg), steps=5)
        assert [s.scene for s in log.steps] == [0, 1, 0, 1, 0]
        assert [s.step for s in log.steps] == list(range(5))

    def test_loss_goes_down(self, samples):
        cfg = tiny(train={"lr": 0.05})
        log = train(cfg, samples[:1], ParamStore.initialize(cfg), steps=30)
        assert log.losses[-1] < log.losses[0]

    def test_jsonl_log(self, samples, tmp_path):
        cfg = tiny()
        path = tmp_path / "train.jsonl"
        log = train(cfg, samples, ParamStore.initialize(cfg), steps=3, log_path=path)
        lines = path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 3
        records = [json.loads(line) for line in lines]
        assert [r["step"] for r in records] == [0, 1, 2]
        assert records[0]["loss"] == log.steps[0].loss
        assert set(records[0]) == {"step", "loss", "grad_norm", "scene"}

    def test_non_finite_loss_aborts(self, samples, monkeypatch):
        cfg = tiny()
        monkeypatch.setattr(trainer_module, "loss_and_grads", lambda *args: (float("nan"), {}))
        with pytest.raises(TrainingError) as e:
            train(cfg, samples, ParamStore.initialize(cfg), steps=2)
        assert e.value.step == 0

    def test_needs_a_scene(self):
        cfg = tiny()
        with pytest.raises(DataError):
            train(cfg, [], ParamStore.initialize(cfg), steps=1)


@pytest.mark.slow
def test_desk_single_scene_overfit():
    cfg = config_from_dict({"lidar": {"n_beams": 32, "points_per_beam": 360}})
    samples = build_dataset(cfg, [cfg.seed])
    log = train(cfg, samples, ParamStore.initialize(cfg), steps=200)
    assert log.losses[-1] < 0.25 * log.losses[0]
