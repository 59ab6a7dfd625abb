"""Core math tests.

The oracles live at the top and are built independently of the library:
a Rodrigues rotation matrix assembled from axis and angle, and the matrix
exponential of the cross-product generator.  Library rotations must agree
with both before any higher-level test is trusted.
"""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.linalg import expm

from polcontrol.core import (
    CARDINAL_STATES,
    LinearRetarder,
    Rotation,
    StokesVector,
    misalignment,
    normalize,
    solve_retarder,
    sop,
)
from polcontrol.errors import NonPositiveIntensity, NonUnitAxis


# ---------------------------------------------------------------- oracles


def rodrigues_matrix(axis, theta):
    """Independent 3x3 rotation oracle: R = I + sin(t) K + (1-cos(t)) K^2."""
    a = np.asarray(axis, dtype=float)
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + math.sin(theta) * k + (1.0 - math.cos(theta)) * (k @ k)


def expm_matrix(axis, theta):
    """Second oracle: matrix exponential of the cross-product generator."""
    a = np.asarray(axis, dtype=float)
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return expm(theta * k)


def random_unit(rng, n=1):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def angle_between(a, b):
    """Chord-based angle oracle; accurate to ~1e-16 rad near zero where the
    acos-of-dot form bottoms out around 1e-8."""
    return 2.0 * math.asin(min(1.0, float(np.linalg.norm(np.asarray(a) - np.asarray(b))) / 2.0))


def test_oracles_agree_with_each_other():
    rng = np.random.default_rng(7)
    for _ in range(50):
        axis = random_unit(rng)[0]
        theta = rng.uniform(-2 * math.pi, 2 * math.pi)
        np.testing.assert_allclose(
            rodrigues_matrix(axis, theta), expm_matrix(axis, theta), atol=1e-12
        )


# ------------------------------------------------------------- normalize


def test_normalize_unit_input_passthrough():
    out = normalize(StokesVector(1.0, 0.6, 0.0, 0.8))
    np.testing.assert_allclose(out.sop, [0.6, 0.0, 0.8], atol=1e-12)
    assert out.dop == pytest.approx(1.0, abs=1e-12)
    assert not out.depolarized


def test_normalize_unpolarized():
    out = normalize(StokesVector(1.0, 0.0, 0.0, 0.0))
    assert out.sop is None
    assert out.dop == 0.0
    assert out.depolarized


def test_normalize_half_dop():
    # |(0.6, 0, 0.8)| / 2 = 0.5 by hand
    out = normalize(StokesVector(2.0, 0.6, 0.0, 0.8))
    np.testing.assert_allclose(out.sop, [0.6, 0.0, 0.8], atol=1e-12)
    assert out.dop == pytest.approx(0.5, rel=1e-12)
    assert not out.depolarized


def test_normalize_rejects_nonpositive_intensity():
    with pytest.raises(NonPositiveIntensity):
        normalize(StokesVector(0.0, 0.0, 0.0, 0.1))
    with pytest.raises(NonPositiveIntensity):
        normalize(StokesVector(-1.0, 0.0, 0.0, 0.1))


def test_normalize_flags_below_dop_min():
    out = normalize(StokesVector(1.0, 1e-9, 0.0, 0.0))
    assert out.depolarized
    assert out.sop is not None  # direction still reported
    out2 = normalize(StokesVector(1.0, 1e-3, 0.0, 0.0))
    assert not out2.depolarized


def test_dop_in_unit_interval_for_physical_vectors():
    rng = np.random.default_rng(11)
    for _ in range(500):
        s0 = rng.uniform(0.1, 10.0)
        part = random_unit(rng)[0] * rng.uniform(0.0, 1.0) * s0
        sv = StokesVector(s0, *part)
        assert sv.is_physical()
        assert 0.0 <= normalize(sv).dop <= 1.0 + 1e-12


def test_is_physical_rejects_overfull_vector():
    assert not StokesVector(1.0, 1.0, 1.0, 0.0).is_physical()


# -------------------------------------------------------------- rotations


def test_from_axis_angle_identity():
    q = Rotation.from_axis_angle(np.array([1.0, 0.0, 0.0]), 0.0)
    assert q.as_tuple() == (1.0, 0.0, 0.0, 0.0)


def test_from_axis_angle_half_turn_about_z():
    q = Rotation.from_axis_angle(np.array([0.0, 0.0, 1.0]), math.pi)
    np.testing.assert_allclose(q.as_tuple(), (0.0, 0.0, 0.0, 1.0), atol=1e-15)


def test_from_axis_angle_quarter_turn_about_y():
    q = Rotation.from_axis_angle(np.array([0.0, 1.0, 0.0]), math.pi / 2)
    c = math.cos(math.pi / 4)
    np.testing.assert_allclose(q.as_tuple(), (c, 0.0, c, 0.0), atol=1e-15)


def test_from_axis_angle_rejects_non_unit():
    with pytest.raises(NonUnitAxis):
        Rotation.from_axis_angle(np.array([1.0, 1.0, 0.0]), 0.3)


def test_rotate_right_hand_rule_about_z():
    q = Rotation.from_axis_angle(np.array([0.0, 0.0, 1.0]), math.pi / 2)
    np.testing.assert_allclose(q.apply(sop(1, 0, 0)), [0.0, 1.0, 0.0], atol=1e-15)


def test_rotate_matches_matrix_oracle_example():
    q = Rotation.from_axis_angle(np.array([0.0, 1.0, 0.0]), math.pi / 2)
    np.testing.assert_allclose(q.apply(sop(0, 0, 1)), [1.0, 0.0, 0.0], atol=1e-15)


def test_quaternion_matches_rodrigues_and_expm():
    rng = np.random.default_rng(23)
    for _ in range(300):
        axis = random_unit(rng)[0]
        theta = rng.uniform(0.0, 2 * math.pi)
        q = Rotation.from_axis_angle(axis, theta)
        np.testing.assert_allclose(q.to_matrix(), rodrigues_matrix(axis, theta), atol=1e-12)
        np.testing.assert_allclose(q.to_matrix(), expm_matrix(axis, theta), atol=1e-9)
        v = random_unit(rng)[0]
        np.testing.assert_allclose(q.apply(v), rodrigues_matrix(axis, theta) @ v, atol=1e-12)


def test_rotation_preserves_norm_bulk():
    rng = np.random.default_rng(31)
    axes = random_unit(rng, 10_000)
    thetas = rng.uniform(0.0, 2 * math.pi, size=10_000)
    vecs = random_unit(rng, 10_000)
    worst = 0.0
    for axis, theta, v in zip(axes, thetas, vecs):
        out = Rotation.from_axis_angle(axis, theta).apply(v)
        worst = max(worst, abs(float(np.linalg.norm(out)) - 1.0))
    assert worst < 1e-9


def test_composition_law():
    rng = np.random.default_rng(37)
    for _ in range(200):
        a1, a2 = random_unit(rng), random_unit(rng)
        q1 = Rotation.from_axis_angle(a1[0], rng.uniform(0, 2 * math.pi))
        q2 = Rotation.from_axis_angle(a2[0], rng.uniform(0, 2 * math.pi))
        s = random_unit(rng)[0]
        np.testing.assert_allclose(
            q2.apply(q1.apply(s)), (q2 * q1).apply(s), atol=1e-9
        )


def test_composition_associative_at_tolerance():
    rng = np.random.default_rng(41)
    for _ in range(200):
        qs = [
            Rotation.from_axis_angle(random_unit(rng)[0], rng.uniform(0, 2 * math.pi))
            for _ in range(3)
        ]
        s = random_unit(rng)[0]
        q3, q2, q1 = qs
        left = ((q3 * q2) * q1).apply(s)
        right = (q3 * (q2 * q1)).apply(s)
        np.testing.assert_allclose(left, right, atol=1e-9)


def test_conjugate_inverts():
    rng = np.random.default_rng(43)
    for _ in range(100):
        q = Rotation.from_axis_angle(random_unit(rng)[0], rng.uniform(0, 2 * math.pi))
        s = random_unit(rng)[0]
        np.testing.assert_allclose(q.conjugate().apply(q.apply(s)), s, atol=1e-12)


def test_unit_norm_invariant():
    rng = np.random.default_rng(47)
    for _ in range(100):
        q = Rotation.from_axis_angle(random_unit(rng)[0], rng.uniform(0, 2 * math.pi))
        assert abs(q.norm() - 1.0) < 1e-9


# -------------------------------------------------------------- retarders


def test_retarder_zero_delta_is_identity():
    rng = np.random.default_rng(53)
    for alpha in rng.uniform(0, 2 * math.pi, size=20):
        q = LinearRetarder(float(alpha), 0.0).to_rotation()
        s = random_unit(rng)[0]
        np.testing.assert_allclose(q.apply(s), s, atol=1e-12)


def test_retarder_half_wave_about_s1():
    q = LinearRetarder(0.0, 0.5).to_rotation()
    oracle = rodrigues_matrix([1.0, 0.0, 0.0], math.pi)
    np.testing.assert_allclose(q.to_matrix(), oracle, atol=1e-12)


def test_retarder_quarter_turn_about_s2():
    # alpha=pi puts the eigenmode on (0,1,0); delta=0.25 is a 90 degree turn
    r = LinearRetarder(math.pi, 0.25)
    np.testing.assert_allclose(r.eigenmode(), [0.0, 1.0, 0.0], atol=1e-15)
    oracle = rodrigues_matrix([0.0, 1.0, 0.0], math.pi / 2)
    np.testing.assert_allclose(r.to_rotation().to_matrix(), oracle, atol=1e-12)


def test_retarder_eigenmode_is_equatorial():
    rng = np.random.default_rng(59)
    for _ in range(100):
        r = LinearRetarder(rng.uniform(0, 2 * math.pi), rng.uniform(0, 1))
        assert r.eigenmode()[2] == 0.0


def test_retarder_matrix_agreement_bulk():
    rng = np.random.default_rng(61)
    for _ in range(1000):
        r = LinearRetarder(rng.uniform(0, 2 * math.pi), rng.uniform(0, 1))
        oracle = rodrigues_matrix(r.eigenmode(), r.rotation_angle())
        np.testing.assert_allclose(r.to_rotation().to_matrix(), oracle, atol=1e-12)


def test_retarder_domain_validation():
    with pytest.raises(ValueError):
        LinearRetarder(-0.1, 0.2)
    with pytest.raises(ValueError):
        LinearRetarder(2 * math.pi, 0.2)
    with pytest.raises(ValueError):
        LinearRetarder(1.0, 1.0)
    with pytest.raises(ValueError):
        LinearRetarder(1.0, -0.01)


# ----------------------------------------------------------------- solver


def test_solver_identity_case():
    r = solve_retarder(sop(0.6, 0.0, 0.8), sop(0.6, 0.0, 0.8))
    assert r.alpha == 0.0 and r.delta == 0.0


def test_solver_pole_to_equator():
    r = solve_retarder(sop(0, 0, 1), sop(1, 0, 0))
    assert r.alpha == pytest.approx(math.pi, abs=1e-12)
    assert r.delta == pytest.approx(0.25, abs=1e-12)


def test_solver_antipodal_equatorial():
    r = solve_retarder(sop(1, 0, 0), sop(-1, 0, 0))
    assert r.delta == pytest.approx(0.5, abs=1e-12)
    assert r.alpha == pytest.approx(math.pi, abs=1e-12)
    out = r.to_rotation().apply(sop(1, 0, 0))
    np.testing.assert_allclose(out, [-1.0, 0.0, 0.0], atol=1e-12)


def test_solver_property_bulk():
    rng = np.random.default_rng(67)
    cur = random_unit(rng, 10_000)
    tgt = random_unit(rng, 10_000)
    worst = 0.0
    for c, t in zip(cur, tgt):
        r = solve_retarder(c, t)
        assert 0.0 <= r.alpha < 2 * math.pi
        assert 0.0 <= r.delta < 1.0
        got = r.to_rotation().apply(c)
        worst = max(worst, angle_between(got, t / np.linalg.norm(t)))
    assert worst < 1e-9


def test_solver_polar_mirror_pairs():
    # current - target parallel to the polar axis: the degenerate tie-break
    rng = np.random.default_rng(71)
    cases = [(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0]))]
    for _ in range(200):
        eq = random_unit(rng)[0]
        z = rng.uniform(0.05, 0.95)
        r_eq = math.sqrt(1 - z * z)
        c = np.array([eq[0], eq[1], 0.0])
        c = c / np.linalg.norm(c) * r_eq
        cases.append((np.array([c[0], c[1], z]), np.array([c[0], c[1], -z])))
    for c, t in cases:
        r = solve_retarder(c, t)
        got = r.to_rotation().apply(c)
        assert angle_between(got, t) < 1e-9


def test_solver_nearly_equal_states():
    c = sop(0.6, 0.0, 0.8)
    t = np.array([0.6, 1e-13, 0.8])
    t = t / np.linalg.norm(t)
    r = solve_retarder(c, t)
    assert angle_between(r.to_rotation().apply(c), t) < 1e-9


# ------------------------------------------------------------ misc metric


def test_misalignment_trivials():
    assert misalignment(sop(1, 0, 0), sop(1, 0, 0)) == 0.0
    assert misalignment(sop(1, 0, 0), sop(0, 1, 0)) == pytest.approx(math.pi / 2)
    assert misalignment(sop(1, 0, 0), sop(-1, 0, 0)) == pytest.approx(math.pi)


def test_cardinal_states_table():
    assert set(CARDINAL_STATES) == {"H", "V", "D", "A", "R", "L"}
    for v in CARDINAL_STATES.values():
        assert np.linalg.norm(v) == pytest.approx(1.0)
    np.testing.assert_allclose(
        CARDINAL_STATES["H"] + CARDINAL_STATES["V"], [0.0, 0.0, 0.0]
    )


def test_sop_constructor_rejects_non_unit():
    with pytest.raises(ValueError):
        sop(1.0, 1.0, 0.0)
