import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from uavmimo.antenna import (ArrayConfig, SteeringContext, analog_beam_gain, array_factor,
                             array_factor_gain, element_gain, element_pattern, gain_vs_distance,
                             steering_vector, to_array_frame)

SU = ArrayConfig.single_user()
MU = ArrayConfig.multi_user()


def path_length_phases(cfg, az, el):
    """Oracle: port phases from explicit 3D positions of the tilted panel."""
    t = np.radians(cfg.mechanical_downtilt)
    a, e = np.radians(az), np.radians(el)
    u = np.array([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)])
    row_axis = np.array([np.sin(t), 0.0, np.cos(t)])  # panel's vertical axis after tilting down
    col_axis = np.array([0.0, 1.0, 0.0])
    ph = []
    for m in range(cfg.rows):
        for n in range(cfg.cols):
            p = cfg.element_spacing * (m * row_axis + n * col_axis)
            ph += [2 * np.pi * p @ u] * (2 if cfg.cross_polarized else 1)
    return np.exp(1j * np.array(ph))


def test_port_counts():
    assert SU.n_antennas == 16
    assert MU.n_antennas == 128
    assert ArrayConfig(rows=4, cols=2, cross_polarized=False).n_antennas == 8


def test_bad_spacing():
    with pytest.raises(ValueError):
        ArrayConfig(element_spacing=0.0)


def test_element_pattern_examples():
    assert element_pattern(0.0, 0.0) == 8.0
    assert_allclose(element_pattern(32.5, 0.0), 5.0)
    assert_allclose(element_pattern(0.0, 32.5), 5.0)
    assert_allclose(element_pattern(180.0, 0.0), -22.0)


def test_element_gain_peaks_along_tilt():
    assert_allclose(element_gain(SU, SteeringContext(0.0, -12.0)), 8.0, atol=1e-12)
    assert element_gain(SU, SteeringContext(0.0, 0.0)) < 8.0


@settings(max_examples=100, deadline=None)
@given(st.floats(-180, 180), st.floats(-90, 90))
def test_element_gain_even_and_bounded(az, el):
    ctx, mirror = SteeringContext(az, el), SteeringContext(-az, el)
    g = element_gain(SU, ctx)
    assert_allclose(g, element_gain(SU, mirror), atol=1e-9)
    assert -22.0 - 1e-12 <= g <= 8.0 + 1e-12


def test_to_array_frame_tilt_direction():
    az, el = to_array_frame(0.0, -12.0, 12.0)
    assert_allclose([az, el], [0.0, 0.0], atol=1e-12)


def test_steering_broadside_is_all_ones():
    a = steering_vector(MU, SteeringContext(0.0, -12.0))
    assert_allclose(a, np.ones(128), atol=1e-12)


@pytest.mark.parametrize("cfg", [SU, MU, ArrayConfig(rows=3, cols=4, cross_polarized=False,
                                                     element_spacing=0.7, mechanical_downtilt=5.0)])
def test_steering_matches_path_length_oracle(cfg):
    rng = np.random.default_rng(0)
    for az, el in zip(rng.uniform(-180, 180, 25), rng.uniform(-90, 90, 25)):
        assert_allclose(steering_vector(cfg, SteeringContext(az, el)),
                        path_length_phases(cfg, az, el), atol=1e-10)


def test_vertical_phase_progression():
    cfg = ArrayConfig(rows=8, cols=1, cross_polarized=False, mechanical_downtilt=0.0)
    theta = 23.0
    a = steering_vector(cfg, SteeringContext(0.0, theta))
    k = np.arange(8)
    assert_allclose(a, np.exp(1j * 2 * np.pi * 0.5 * np.sin(np.radians(theta)) * k), atol=1e-12)


def test_steering_conjugate_symmetry():
    cfg = ArrayConfig(rows=8, cols=1, mechanical_downtilt=0.0)
    for th in (5.0, 30.0, 71.0):
        assert_allclose(steering_vector(cfg, SteeringContext(0.0, -th)),
                        np.conj(steering_vector(cfg, SteeringContext(0.0, th))), atol=1e-12)


def test_xpol_pairs_share_phase():
    a = steering_vector(MU, SteeringContext(17.0, 8.0))
    assert_allclose(a[0::2], a[1::2])


@settings(max_examples=50, deadline=None)
@given(st.floats(-180, 180), st.floats(-90, 90))
def test_steering_unit_modulus(az, el):
    a = steering_vector(MU, SteeringContext(az, el))
    assert np.max(np.abs(np.abs(a) - 1.0)) < 1e-12


def test_array_factor_at_tilt_is_coherent_sum():
    ctx = SteeringContext(0.0, -12.0)
    assert_allclose(array_factor_gain(SU, ctx), 10 * np.log10(8.0), atol=1e-12)
    assert_allclose(analog_beam_gain(SU, ctx), 8.0 + 10 * np.log10(8.0), atol=1e-12)


def test_array_factor_gain_matches_oracle():
    rng = np.random.default_rng(1)
    for az, el in zip(rng.uniform(-90, 90, 30), rng.uniform(-90, 90, 30)):
        a = path_length_phases(SU, az, el)[0::2]  # one slant
        expected = 10 * np.log10(np.abs(a.sum()) ** 2 / 8)
        assert_allclose(array_factor_gain(SU, SteeringContext(az, el)), expected, atol=1e-9)


def test_array_factor_gain_rejects_planar():
    with pytest.raises(ValueError):
        array_factor_gain(MU, SteeringContext(0.0, 0.0))


def test_seven_nulls_between_main_lobes():
    psi = np.linspace(1e-6, 2 * np.pi - 1e-6, 200001)
    mag = np.abs(array_factor(psi, 8))
    interior = (mag[1:-1] < mag[:-2]) & (mag[1:-1] < mag[2:])
    nulls = psi[1:-1][interior]
    assert len(nulls) == 7
    assert_allclose(nulls, 2 * np.pi * np.arange(1, 8) / 8, atol=1e-4)
    assert np.all(mag[1:-1][interior] < 1e-3)


def test_ground_user_peak_distance():
    d = np.arange(1.0, 1001.0)
    g = gain_vs_distance(SU, 25.0, 1.5, d)
    assert 80.0 <= d[np.argmax(g)] <= 180.0


def test_aerial_user_sees_only_sidelobes():
    d = np.arange(1.0, 1001.0)
    peak = 8.0 + 10 * np.log10(8.0)
    for h in (50.0, 150.0, 300.0):
        assert gain_vs_distance(SU, 25.0, h, d).max() < peak - 3.0
