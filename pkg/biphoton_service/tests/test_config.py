import json
from pathlib import Path

import pytest
from scipy.constants import c as SPEED_OF_LIGHT

from common_lib.errors import ConfigError
from common_lib.optics.egh_modes import ModeIndex
from common_lib.optics.phasematch import MismatchConvention
from config import load_config, parse_config


def test_defaults(raw_config):
    config = parse_config(json.dumps(raw_config))
    assert config.convention == MismatchConvention.EXPONENT_CONSISTENT
    assert config.seed == 0
    assert config.expansion().coefficient(ModeIndex(0, 0)) == 1
    assert config.pump_frequency == SPEED_OF_LIGHT / 405e-9
    f_s, f_i = config.signal_frequencies()
    assert f_s == config.pump_frequency / 2
    assert f_s + f_i == config.pump_frequency


def test_geometry_uses_medium_wavelength(raw_config):
    raw_config["pump"]["n_p"] = 1.5
    geom = parse_config(json.dumps(raw_config)).geometry()
    assert geom.wavelength == pytest.approx(405e-9 / 1.5, rel=1e-15)
    assert geom.w0 == 20e-6


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config('{\n  "pump":\n}', "broken.json")


def test_unknown_field_is_named(raw_config):
    raw_config["pump"]["colour"] = "blue"
    with pytest.raises(ConfigError, match="pump.colour"):
        parse_config(json.dumps(raw_config))


def test_missing_field_is_named(raw_config):
    del raw_config["pump"]["waist_m"]
    with pytest.raises(ConfigError, match="pump.waist_m"):
        parse_config(json.dumps(raw_config))


def test_missing_field_file_is_rejected(raw_config, tmp_path):
    raw_config["pump"]["field_csv"] = "nowhere.csv"
    with pytest.raises(ConfigError, match="pump.field_csv"):
        parse_config(json.dumps(raw_config), base_dir=tmp_path)


def test_field_file_is_resolved_against_config(raw_config, write_config, tmp_path):
    (tmp_path / "field.csv").write_text("x,y,re,im\n")
    raw_config["pump"]["field_csv"] = "field.csv"
    config = load_config(write_config(raw_config))
    assert config.pump.field_csv == tmp_path / "field.csv"


def test_grid_budget(raw_config):
    for axis in ("signal_x", "signal_y", "idler_x", "idler_y"):
        raw_config["jsa"][axis]["count"] = 200
    with pytest.raises(ConfigError, match="budget"):
        parse_config(json.dumps(raw_config))


def test_jsa_needs_crystal(raw_config):
    del raw_config["crystal"]
    with pytest.raises(ConfigError, match="crystal"):
        parse_config(json.dumps(raw_config))


def test_pulse_needs_bandwidth(raw_config):
    raw_config["envelope"] = {"kind": "gaussian_pulse"}
    with pytest.raises(ConfigError, match="sigma_f_hz"):
        parse_config(json.dumps(raw_config))


def test_bad_susceptibility_key(raw_config):
    raw_config["crystal"]["chi"] = {"zq": 1.0}
    with pytest.raises(ConfigError, match="crystal.chi"):
        parse_config(json.dumps(raw_config))


def test_normalize_flag(raw_config):
    raw_config["pump"]["modes"] = [{"n": 0, "m": 0, "re": 3.0}, {"n": 1, "m": 1, "re": 0.0, "im": 4.0}]
    with pytest.raises(ValueError):
        parse_config(json.dumps(raw_config)).expansion()
    raw_config["pump"]["normalize"] = True
    expansion = parse_config(json.dumps(raw_config)).expansion()
    assert expansion.coefficient(ModeIndex(1, 1)) == pytest.approx(0.8j)
    assert expansion.max_order == 2


def test_overrides(raw_config, tmp_path):
    config = parse_config(json.dumps(raw_config)).with_overrides(seed=7, convention="paper", output_path=tmp_path)
    assert config.seed == 7
    assert config.convention == MismatchConvention.PAPER_LITERAL
    assert config.output_path == Path(tmp_path)
    unchanged = config.with_overrides()
    assert unchanged.seed == 7


def test_unreadable_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_segments_build_crystal(raw_config):
    raw_config["crystal"]["segments"] = [{"offset_m": 0.0}, {"offset_m": 1e-3}]
    crystal = parse_config(json.dumps(raw_config)).crystal_config()
    assert [s.offset for s in crystal.segments] == [0.0, 1e-3]
