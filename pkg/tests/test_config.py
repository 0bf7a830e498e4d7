import json

import pytest

from heraldkit.config import (
    ConfigError,
    default_config,
    load_config,
    opo_params,
    tomography_settings,
)


def test_defaults_validate():
    cfg = load_config()
    assert cfg["seed"] == 1064
    assert cfg["acquisition"]["n_events"] == 50000


def test_section_merge_keeps_other_defaults(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"opo": {"gamma_hz": 65e6}}))
    cfg = load_config(path)
    assert cfg["opo"]["gamma_hz"] == 65e6
    assert cfg["opo"]["t_out"] == 0.10  # untouched sibling key


def test_overrides_win_over_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 7}))
    cfg = load_config(path, overrides={"seed": 9})
    assert cfg["seed"] == 9


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"opo": {"gamma": 60e6}}))
    with pytest.raises(ConfigError, match="gamma"):
        load_config(path)


def test_invalid_json_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(path)


def test_semantic_validation(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"filters": {"fp_bandwidth_hz": 1e15}}))
    with pytest.raises(ConfigError):
        load_config(path)


def test_builders_round_config():
    cfg = default_config()
    opo = opo_params(cfg)
    assert opo.gamma == 60e6 and opo.pump_ratio == 0.0125
    settings = tomography_settings(cfg)
    assert settings.n_max == 10 and settings.seed == 1064
    binned = tomography_settings({**cfg, "tomography": {**cfg["tomography"], "binning": [100, 8]}})
    assert binned.binning == (100, 8)
