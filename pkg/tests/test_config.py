import math

import numpy as np
import pytest

from polcontrol.config import (
    calibration_text,
    config_path_from_env,
    get_bits,
    get_float,
    get_int,
    get_vec3,
    load_config,
    parse_config,
    stage_calibrations,
    write_calibration,
)
from polcontrol.errors import ConfigInvalid
from polcontrol.pcm import DEFAULT_CALIBRATION, CalibrationParams


GOOD = """
# loop settings
schema: 1
stages: 2
profile: gain5
seed: 7
target: 0 0 1
stage1.v_pi: 72.5
stage1.v_0: 35
stage1.v_bias_a: 3.25
stage1.v_bias_c: -2
"""


def test_parse_basic():
    cfg = parse_config(GOOD)
    assert cfg["stages"] == "2"
    assert cfg["profile"] == "gain5"
    assert cfg["stage1.v_pi"] == "72.5"


def test_comments_and_blanks_ignored():
    cfg = parse_config("schema: 1\n\n# note\nseed: 3  # trailing\n")
    assert cfg["seed"] == "3"


def test_schema_required():
    with pytest.raises(ConfigInvalid):
        parse_config("seed: 3\n")
    with pytest.raises(ConfigInvalid):
        parse_config("schema: 2\nseed: 3\n")


def test_unknown_key_rejected():
    with pytest.raises(ConfigInvalid, match="unknown key"):
        parse_config("schema: 1\nsped: 3\n")


def test_duplicate_key_rejected():
    with pytest.raises(ConfigInvalid, match="duplicate"):
        parse_config("schema: 1\nseed: 3\nseed: 4\n")


def test_malformed_line_rejected():
    with pytest.raises(ConfigInvalid):
        parse_config("schema: 1\njust words\n")


def test_typed_getters():
    cfg = parse_config(GOOD)
    assert get_int(cfg, "stages", 1) == 2
    assert get_int(cfg, "max_ticks", 500) == 500
    assert get_float(cfg, "stage1.v_pi", 0.0) == 72.5
    vec = get_vec3(cfg, "target", (1, 0, 0))
    assert np.allclose(vec, [0, 0, 1])
    assert np.allclose(get_vec3(cfg, "reference", (1, 0, 0)), [1, 0, 0])


def test_getter_type_errors():
    cfg = parse_config("schema: 1\nseed: seven\ntarget: 0 0\n")
    with pytest.raises(ConfigInvalid):
        get_int(cfg, "seed", 0)
    with pytest.raises(ConfigInvalid):
        get_vec3(cfg, "target", (1, 0, 0))


def test_bits_none_literal():
    cfg = parse_config("schema: 1\npipeline.bits: none\n")
    assert get_bits(cfg, "pipeline.bits", 12) is None
    cfg = parse_config("schema: 1\npipeline.bits: 16\n")
    assert get_bits(cfg, "pipeline.bits", 12) == 16
    assert get_bits({}, "pipeline.bits", 12) == 12


def test_stage_calibrations_fallback_and_override():
    cfg = parse_config(GOOD)
    cals = stage_calibrations(cfg, DEFAULT_CALIBRATION, 2)
    assert cals[0].v_pi == 72.5
    assert cals[0].v_bias_c == -2
    assert cals[1] == DEFAULT_CALIBRATION


def test_stage_calibration_incomplete():
    cfg = parse_config("schema: 1\nstage1.v_pi: 70\n")
    with pytest.raises(ConfigInvalid, match="incomplete"):
        stage_calibrations(cfg, DEFAULT_CALIBRATION, 1)


def test_calibration_roundtrip(tmp_path):
    cals = [
        CalibrationParams(72.123456789, 35.987654321, 3.14159265, -2.71828183),
        CalibrationParams(81.0, 40.5, -1.5, 0.25),
    ]
    path = tmp_path / "cal.cfg"
    write_calibration(str(path), cals)
    back = stage_calibrations(load_config(str(path)), DEFAULT_CALIBRATION, 2)
    # six significant digits survive the round trip
    for orig, rt in zip(cals, back):
        assert math.isclose(rt.v_pi, orig.v_pi, rel_tol=1e-5)
        assert math.isclose(rt.v_0, orig.v_0, rel_tol=1e-5)
        assert math.isclose(rt.v_bias_a, orig.v_bias_a, rel_tol=1e-5)
        assert math.isclose(rt.v_bias_c, orig.v_bias_c, rel_tol=1e-5)
    assert "3.14159" in calibration_text(cals)


def test_env_var_override(monkeypatch):
    monkeypatch.delenv("POLCONTROL_CONFIG", raising=False)
    assert config_path_from_env() is None
    assert config_path_from_env("fallback.cfg") == "fallback.cfg"
    monkeypatch.setenv("POLCONTROL_CONFIG", "/tmp/other.cfg")
    assert config_path_from_env("fallback.cfg") == "/tmp/other.cfg"
