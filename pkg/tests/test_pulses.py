import math

import numpy as np
import pytest

from qutrit_ks import linalg, pulses
from qutrit_ks.model import build_model, ray_unit


@pytest.fixture(scope="module")
def settings():
    return pulses.settings_table()


def test_r1_identity():
    assert np.allclose(pulses.r1_matrix(0, 1.23), np.eye(3), atol=1e-15)


def test_r1_direct_substitution():
    m = pulses.r1_matrix(math.pi / 2, math.pi)
    s = 1 / math.sqrt(2)
    expected = np.array([[s, 0, -s], [0, 1, 0], [s, 0, s]])
    assert np.allclose(m, expected, atol=1e-12)


def test_r2_direct_substitution():
    m = pulses.r2_matrix(math.pi, math.pi)
    expected = np.array([[1, 0, 0], [0, 0, 1], [0, -1, 0]])
    assert np.allclose(m, expected, atol=1e-12)


def test_rotations_unitary():
    rng = np.random.default_rng(1)
    for _ in range(100):
        t, p = rng.uniform(0, 2 * math.pi, 2)
        for m in (pulses.r1_matrix(t, p), pulses.r2_matrix(t, p)):
            assert linalg.frobenius_distance(
                linalg.adjoint(m) @ m, np.eye(3)) < 1e-12


def test_alpha_identity():
    assert math.sin(pulses.ALPHA / 2) == pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert abs(pulses.ALPHA - 0.392 * math.pi) < 2e-3


def test_settings_shape(settings):
    assert [s.id for s in settings] == [f"M{i}" for i in range(1, 17)]
    for s in settings[:4]:
        assert len(s.mapping) == 3
    for s in settings[4:]:
        assert len(s.mapping) == 2
    mapped = {r for s in settings for r in s.mapping.values()}
    assert mapped == set(range(1, 14))


def test_settings_rows_match_examples(settings):
    by_id = {s.id: s for s in settings}
    assert by_id["M1"].mapping == {1: 1, 2: 2, 3: 3}
    assert by_id["M1"].pulses == ()
    assert by_id["M2"].mapping == {1: 5, 2: 2, 3: 8}
    assert by_id["M2"].pulses == (pulses.Pulse(1, math.pi / 2, math.pi),)
    assert by_id["M5"].mapping == {2: 4, 3: 10}
    assert by_id["M5"].pulses == (pulses.Pulse(2, math.pi / 2, 0.0),
                                  pulses.Pulse(1, pulses.ALPHA, 0.0))


def test_compile_chronological_order(settings):
    by_id = {s.id: s for s in settings}
    assert np.allclose(pulses.compile_setting(by_id["M1"]), np.eye(3))
    assert np.allclose(pulses.compile_setting(by_id["M2"]),
                       pulses.r1_matrix(math.pi / 2, math.pi))
    u4 = pulses.compile_setting(by_id["M4"])
    expected = pulses.r1_matrix(math.pi / 2, math.pi) @ pulses.r2_matrix(math.pi, math.pi)
    assert np.allclose(u4, expected, atol=1e-12)
    # v9 must land on |1> up to phase
    assert abs(u4[0, :] @ ray_unit(9)) == pytest.approx(1.0, abs=1e-12)


def test_all_mappings_verify(settings):
    reports = pulses.verify_all_settings(settings)
    assert all(r.ok for r in reports)
    worst = max(d for r in reports for _, _, d in r.deficits)
    assert worst < 1e-9


def test_verify_named_examples(settings):
    by_id = {s.id: s for s in settings}
    u2 = pulses.compile_setting(by_id["M2"])
    assert abs(u2[0, :] @ ray_unit(5)) == pytest.approx(1.0, abs=1e-12)
    u5 = pulses.compile_setting(by_id["M5"])
    assert abs(u5[2, :] @ ray_unit(10)) == pytest.approx(1.0, abs=1e-12)


def test_compatibility_survives_compilation(settings):
    """Mapped projectors become diagonal basis projectors in the rotated frame."""
    model = build_model()
    for s in settings:
        u = pulses.compile_setting(s)
        for basis, ray in s.mapping.items():
            rotated = u @ model.projectors[ray] @ linalg.adjoint(u)
            target = np.zeros((3, 3), dtype=complex)
            target[basis - 1, basis - 1] = 1.0
            assert linalg.frobenius_distance(rotated, target) < 1e-9


def test_edge_coverage(settings):
    model = build_model()
    assert pulses.covered_pairs(settings) == set(model.edges)


def test_swap_pulse():
    for b in (1, 2):
        p = pulses.swap_pulse(b)
        m = pulses.pulse_matrix(p)
        assert abs(m[2, b - 1]) == pytest.approx(1.0, abs=1e-12)
        # populations return after a double swap
        assert abs((m @ m)[b - 1, b - 1]) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        pulses.swap_pulse(3)


def test_schedule_durations(tmp_path):
    hw = pulses.HardwareParams()
    assert hw.pulse_duration_us(pulses.Pulse(1, math.pi / 2, math.pi)) \
        == pytest.approx(7.375)
    assert hw.pulse_duration_us(pulses.Pulse(2, math.pi, 0)) \
        == pytest.approx(14.75)
    by_id = {s.id: s for s in pulses.settings_table()}
    dest = tmp_path / "M1.schedule"
    pulses.emit_schedule(by_id["M1"], dest)
    text = dest.read_text()
    assert "cool    1000.0000" in text
    assert "pump    3.0000" in text
    assert "pulse" not in text  # M1 has no rotations
    pulses.emit_schedule(by_id["M2"], tmp_path / "M2.schedule")
    assert "duration_us=7.3750" in (tmp_path / "M2.schedule").read_text()


def test_faulty_mapping_fails_verification(settings):
    broken = pulses.MeasurementSetting("Mx", {1: 13}, ())
    report = pulses.verify_mapping(broken)
    assert not report.ok
    with pytest.raises(ValueError, match="Mx"):
        pulses.verify_all_settings([broken])
