import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sivtwin.dynamics import ple


@given(st.floats(1e6, 1e9), st.floats(0, 100))
def test_broadening_round_trip(gamma0, s):
    g = ple.power_broadened_fwhm(gamma0, s)
    assert g >= gamma0
    assert ple.saturation_from_fwhm(gamma0, g) == pytest.approx(s, rel=1e-9, abs=1e-9)


def test_broadening_and_saturation_values():
    assert ple.power_broadened_fwhm(100.0, 3.0) == pytest.approx(200.0)
    assert ple.saturation_count_rate(1000.0, 1.0, 50.0) == pytest.approx(550.0)
    with pytest.raises(ValueError):
        ple.power_broadened_fwhm(100.0, -1.0)
    with pytest.raises(ValueError):
        ple.saturation_count_rate(1.0, -0.5)


def test_lorentzian_half_maximum():
    y = ple.lorentzian([0.0, 50.0, -50.0], 0.0, 100.0, 2.0, 1.0)
    assert np.allclose(y, [3.0, 2.0, 2.0])


def test_noiseless_scan_matches_model():
    model = ple.PLEModel(160e6, 2.0, 1000.0, 50.0)
    grid = np.linspace(-1e9, 1e9, 201)
    spec = ple.simulate_ple_scan(model, 0.1e9, grid, 2.0, 0.1, noiseless=True)
    expect = 50 + ple.lorentzian(grid, 0.1e9, 160e6 * np.sqrt(2), 500.0)
    assert np.allclose(spec.values, expect, rtol=1e-14)
    assert spec.acquisition_time == pytest.approx(20.1)
    assert np.allclose(spec.counts, expect * 0.1)


def test_two_line_scan_is_additive():
    model = ple.PLEModel(160e6, 1.0, 1000.0)
    grid = np.linspace(-1e9, 1e9, 101)
    both = ple.simulate_ple_scan(model, [-0.4e9, 0.6e9], grid, 1.0, 1.0, noiseless=True, weights=[1.0, 0.5])
    one = ple.simulate_ple_scan(model, -0.4e9, grid, 1.0, 1.0, noiseless=True)
    two = ple.simulate_ple_scan(model, 0.6e9, grid, 1.0, 1.0, noiseless=True)
    assert np.allclose(both.values, one.values + 0.5 * two.values)


def test_scan_is_seeded_poisson():
    model = ple.PLEModel(160e6, 1.0, 1000.0, 50.0)
    grid = np.linspace(-1e9, 1e9, 101)
    a = ple.simulate_ple_scan(model, 0.0, grid, 1.0, 0.5, seed=3)
    b = ple.simulate_ple_scan(model, 0.0, grid, 1.0, 0.5, seed=3)
    assert np.array_equal(a.values, b.values)
    assert np.allclose(a.counts, np.round(a.counts))
    assert np.allclose(a.sigma, np.sqrt(np.maximum(a.counts, 1)) / 0.5)


def test_model_validation():
    with pytest.raises(ValueError):
        ple.PLEModel(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        ple.PLEModel(1.0, 1.0, -1.0)
    with pytest.raises(ValueError):
        ple.simulate_ple_scan(ple.PLEModel(1.0, 1.0, 1.0), 0.0, [0.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        ple.Spectrum([0, 1], [1.0], [1.0])
