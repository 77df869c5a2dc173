import math

import pytest

from ssasim.config import (
    SsaCompletionRule,
    TimingModel,
    WorldConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from ssasim.latency import GammaParams


def test_defaults_follow_experiment_setup():
    cfg = WorldConfig()
    assert (cfg.width_m, cfg.depth_m) == (1000.0, 1000.0)
    assert cfg.tx_range_m in (75.0, 100.0)
    assert cfg.timing.slot_ms == 100.0
    assert cfg.expected_vehicles() == pytest.approx(100.0)


def test_roundtrip_with_hop_law(tmp_path):
    cfg = WorldConfig(
        intensity_per_m2=1 / 50,
        tx_range_m=75.0,
        timing=TimingModel(mode="distance", hop_law_ms=GammaParams(1.0, 1 / 50)),
        rule=SsaCompletionRule(kind="n_vehicles_informed", n=5),
        speed_range_mps=(0.0, 20.0),
        trials=123,
        seed=9,
    )
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_roundtrip_coverage_rule(tmp_path):
    cfg = WorldConfig(rule=SsaCompletionRule(kind="coverage_threshold", n=None, threshold=0.8))
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_unknown_keys_rejected():
    with pytest.raises(ValueError, match="unknown config keys"):
        config_from_dict({"width_m": 100, "bogus": 1})
    d = config_to_dict(WorldConfig())
    d["timing"]["bogus"] = 1
    with pytest.raises(ValueError, match="unknown timing keys"):
        config_from_dict(d)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"width_m": 0},
        {"intensity_per_m2": -1.0},
        {"tx_range_m": 0},
        {"relay": "carrier_pigeon"},
        {"trials": 0},
        {"speed_range_mps": (5.0, 1.0)},
    ],
)
def test_invalid_config_rejected(kwargs):
    with pytest.raises(ValueError):
        WorldConfig(**kwargs)


def test_rule_validation():
    with pytest.raises(ValueError):
        SsaCompletionRule(kind="n_vehicles_informed", n=0)
    with pytest.raises(ValueError):
        SsaCompletionRule(kind="coverage_threshold", n=None, threshold=1.5)
    with pytest.raises(ValueError):
        SsaCompletionRule(kind="nonsense")


def test_timing_validation():
    with pytest.raises(ValueError):
        TimingModel(mode="slot", slot_ms=0.0)
    with pytest.raises(ValueError):
        TimingModel(mode="warp")
    # distance mode tolerates slot_ms = 0
    TimingModel(mode="distance", slot_ms=0.0)


def test_flood_requires_slots():
    with pytest.raises(ValueError):
        WorldConfig(relay="flood", timing=TimingModel(mode="distance"))
