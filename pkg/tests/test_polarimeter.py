"""Measurement chain tests: front end, quantizer, calibration matrix,
projection, pixel mapping, and end-to-end fidelity bounds."""

from __future__ import annotations

import math

import numpy as np
import pytest

from polcontrol.core import CARDINAL_STATES, StokesVector, normalize
from polcontrol.errors import CodeOutOfRange, NonPositiveIntensity, SingularCalibration
from polcontrol.polarimeter import (
    AdcFrame,
    CalibrationMatrix,
    DetectorVoltages,
    PipelineConfig,
    ScreenConfig,
    adc_sample,
    codes_to_volts,
    front_end,
    ideal_calibration_matrix,
    isometric_project,
    pipeline,
    to_pixels,
    trace_row,
    TRACE_HEADER,
    volts_to_stokes,
)

from test_core import angle_between, random_unit


# ---------------------------------------------------------------- front end


def test_front_end_horizontal():
    dv = front_end(np.array([1.0, 0.0, 0.0]), intensity=1.0)
    np.testing.assert_allclose(dv.v, [1.0, 1.0, 0.5, 0.5], atol=1e-15)


def test_front_end_circular():
    dv = front_end(np.array([0.0, 0.0, 1.0]), intensity=1.0)
    np.testing.assert_allclose(dv.v, [1.0, 0.5, 0.5, 1.0], atol=1e-15)


def test_front_end_mixed_state():
    dv = front_end(np.array([0.6, 0.0, 0.8]), intensity=1.0)
    np.testing.assert_allclose(dv.v, [1.0, 0.8, 0.5, 0.9], atol=1e-15)


def test_front_end_rejects_dark_input():
    with pytest.raises(ValueError):
        front_end(np.array([1.0, 0.0, 0.0]), intensity=0.0)


def test_front_end_clamps_to_rails():
    dv = front_end(np.array([1.0, 0.0, 0.0]), intensity=2.0, responsivity=5.0)
    assert dv.v.max() == 5.0
    assert dv.v.min() >= 0.0


def test_front_end_noise_is_seeded():
    rng1 = np.random.default_rng(5)
    rng2 = np.random.default_rng(5)
    a = front_end(np.array([0.0, 1.0, 0.0]), 1.0, noise_sigma=0.01, rng=rng1)
    b = front_end(np.array([0.0, 1.0, 0.0]), 1.0, noise_sigma=0.01, rng=rng2)
    np.testing.assert_array_equal(a.v, b.v)


# --------------------------------------------------------------- quantizer


def test_adc_zero_and_saturation():
    dv = DetectorVoltages(np.array([0.0, 6.0, 2.5, 5.0]))
    f = adc_sample(dv, bits=12, v_ref=5.0)
    assert f.codes[0] == 0
    assert f.codes[1] == 4095  # saturated above the reference
    assert f.codes[2] == 2048  # round(0.5 * 4095) with ties to even
    assert f.codes[3] == 4095


def test_adc_bit_depth_domain():
    dv = DetectorVoltages(np.zeros(4))
    with pytest.raises(ValueError):
        adc_sample(dv, bits=7)
    with pytest.raises(ValueError):
        adc_sample(dv, bits=17)


def test_codes_to_volts_examples():
    f = AdcFrame(codes=(0, 4095, 2048, 4095), bits=12, v_ref=5.0)
    v = codes_to_volts(f)
    assert v[0] == 0.0
    assert v[1] == 5.0
    assert v[2] == pytest.approx(2.50061, abs=5e-6)  # 2048*5/4095


def test_adc_frame_rejects_out_of_range_code():
    with pytest.raises(CodeOutOfRange):
        AdcFrame(codes=(0, 0, 0, 5000), bits=12, v_ref=5.0)


def test_quantization_round_trip_bound():
    rng = np.random.default_rng(13)
    for bits in (8, 12, 16):
        bound = 5.0 / (2 ** (bits + 1) - 2)
        v = rng.uniform(0.0, 5.0, size=(200, 4))
        for row in v:
            rec = codes_to_volts(adc_sample(DetectorVoltages(row), bits=bits, v_ref=5.0))
            assert np.max(np.abs(rec - row)) <= bound + 1e-15


# ------------------------------------------------------- calibration matrix


def test_ideal_matrix_inverts_front_end():
    rng = np.random.default_rng(19)
    cm = ideal_calibration_matrix(responsivity=5.0)
    for s in random_unit(rng, 100):
        dv = front_end(s, intensity=1.0, responsivity=5.0)
        sv = volts_to_stokes(dv.v, cm)
        out = normalize(sv)
        assert angle_between(out.sop, s) < 1e-12
        assert out.dop == pytest.approx(1.0, abs=1e-12)


def test_identity_matrix_passthrough():
    cm = CalibrationMatrix(np.eye(4))
    sv = volts_to_stokes(np.array([1.0, 0.0, 0.0, 0.0]), cm)
    assert (sv.s0, sv.s1, sv.s2, sv.s3) == (1.0, 0.0, 0.0, 0.0)


def test_singular_matrix_rejected():
    m = np.ones((4, 4))
    with pytest.raises(SingularCalibration):
        CalibrationMatrix(m)


def test_dark_input_fails_downstream():
    cm = CalibrationMatrix(np.eye(4))
    sv = volts_to_stokes(np.zeros(4), cm)
    with pytest.raises(NonPositiveIntensity):
        normalize(sv)


# --------------------------------------------------------------- projection


def test_isometric_pole():
    assert isometric_project(np.array([0.0, 0.0, 1.0])) == (0.0, 1.0)


def test_isometric_s1():
    u, v = isometric_project(np.array([1.0, 0.0, 0.0]))
    assert u == pytest.approx(math.sqrt(3) / 2)
    assert v == pytest.approx(0.5)


def test_isometric_s2():
    u, v = isometric_project(np.array([0.0, 1.0, 0.0]))
    assert u == pytest.approx(-math.sqrt(3) / 2)
    assert v == pytest.approx(0.5)


def test_isometric_is_odd():
    rng = np.random.default_rng(23)
    for s in random_unit(rng, 100):
        u1, v1 = isometric_project(s)
        u2, v2 = isometric_project(-s)
        assert u1 == pytest.approx(-u2, abs=1e-12)
        assert v1 == pytest.approx(-v2, abs=1e-12)


def test_isometric_range_bounds():
    rng = np.random.default_rng(29)
    for s in random_unit(rng, 500):
        u, v = isometric_project(s)
        assert abs(u) <= math.sqrt(3) + 1e-12
        assert abs(v) <= 2.0 + 1e-12


# ------------------------------------------------------------------- pixels


def test_pixel_center():
    pt = to_pixels((0.0, 0.0))
    assert (pt.px, pt.py, pt.in_bounds) == (320, 240, True)


def test_pixel_pole():
    pt = to_pixels((0.0, 1.0))
    assert (pt.px, pt.py) == (320, 140)


def test_pixel_out_of_bounds_reported():
    pt = to_pixels((5.0, 0.0))
    assert not pt.in_bounds
    assert pt.px == 820


def test_cardinal_pixels():
    # frozen integer coordinates of the six cardinal states under the
    # documented projection and default screen
    expected = {
        "H": (407, 190),
        "V": (233, 290),
        "D": (233, 190),
        "A": (407, 290),
        "R": (320, 140),
        "L": (320, 340),
    }
    for name, (ex, ey) in expected.items():
        pt = to_pixels(isometric_project(CARDINAL_STATES[name]))
        assert (pt.px, pt.py) == (ex, ey), name


# ------------------------------------------------------------- whole chain


def test_pipeline_12bit_fidelity():
    rng = np.random.default_rng(31)
    cfg = PipelineConfig()
    worst = 0.0
    for s in random_unit(rng, 1000):
        res = pipeline(s, cfg)
        worst = max(worst, angle_between(res.sop, s))
    assert worst <= 2e-3


def test_pipeline_16bit_beats_12bit():
    rng = np.random.default_rng(37)
    states = random_unit(rng, 500)
    e12 = [angle_between(pipeline(s, PipelineConfig(bits=12)).sop, s) for s in states]
    e16 = [angle_between(pipeline(s, PipelineConfig(bits=16)).sop, s) for s in states]
    assert np.median(e12) >= 8.0 * np.median(e16)


def test_pipeline_ideal_bits_none():
    rng = np.random.default_rng(41)
    cfg = PipelineConfig(bits=None)
    for s in random_unit(rng, 100):
        res = pipeline(s, cfg)
        assert angle_between(res.sop, s) < 1e-12
        assert res.codes is None


def test_pipeline_dop_bound():
    rng = np.random.default_rng(43)
    for bits in (12, 16):
        q = 1.0 / (2**bits - 1)
        cfg = PipelineConfig(bits=bits)
        worst = 0.0
        for s in random_unit(rng, 2000):
            worst = max(worst, pipeline(s, cfg).dop)
        assert worst <= 1.0 + 4.0 * q


def test_pipeline_trace_row_shape():
    res = pipeline(np.array([0.0, 0.0, 1.0]), PipelineConfig())
    row = trace_row(7, res)
    assert len(row.split(",")) == len(TRACE_HEADER.split(","))
    assert row.startswith("7,")


def test_pipeline_noise_requires_rng():
    with pytest.raises(ValueError):
        pipeline(np.array([1.0, 0.0, 0.0]), PipelineConfig(noise_sigma=0.01))
