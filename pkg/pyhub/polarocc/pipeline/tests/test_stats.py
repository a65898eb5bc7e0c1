import pytest

from pyhub.polarocc.pipeline import ParamStore, config_from_dict, model_stats, pd_param_identity, stats_to_dict


@pytest.mark.parametrize("channels", [1, 3, 8])
def test_decomposed_and_full_kernels_have_equal_parameters(channels):
    decomposed, full = pd_param_identity(channels)
    assert decomposed == full == 27 * channels * channels


def test_totals_match_param_store():
    cfg = config_from_dict({"grid": {"preset": "tiny"}, "channels": 3, "fusion": {"mode": "fused"}})
    stats = stats_to_dict(model_stats(cfg))
    assert stats["total_params"] == ParamStore.initialize(cfg).n_params()
    assert [m["module"] for m in stats["modules"]] == ["stem", "fusion", "backbone.0", "grp", "sampler", "head"]


def test_backbone_capacity_does_not_depend_on_decomposition():
    serial = model_stats(config_from_dict({}))
    naive = model_stats(config_from_dict({"pdconv": {"enable": False}}))
    pick = {row.module: row for row in serial}
    for row in naive:
        if row.module.startswith("backbone."):
            assert row.params == pick[row.module].params
            assert row.macs == pick[row.module].macs


def test_desk_macs_are_positive():
    rows = model_stats(config_from_dict({}))
    assert all(row.macs > 0 for row in rows)
    assert {row.module for row in rows} >= {"stem", "backbone.0", "backbone.1", "grp", "sampler", "head"}
