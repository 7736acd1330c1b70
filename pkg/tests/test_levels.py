import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from sivtwin import levels as L

MU_B = L.MU_B_HZ_PER_T
zero_strain = st.builds(L.BranchParams, spin_orbit=st.floats(1e9, 500e9),
                        orbital_g_quench=st.floats(0, 1))
strained = st.builds(L.BranchParams, spin_orbit=st.floats(1e9, 500e9), strain_alpha=st.floats(-50e9, 50e9),
                     strain_beta=st.floats(-50e9, 50e9), orbital_g_quench=st.floats(0, 1))
fields = st.builds(L.FieldConfig, magnitude=st.floats(0, 10), polar_angle=st.floats(0, math.pi))


@given(strained, fields)
def test_hamiltonian_is_hermitian(params, field):
    h = L.build_branch_hamiltonian(params, field)
    assert h.shape == (4, 4)
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * max(np.linalg.norm(h), 1.0)


def test_zero_field_zero_strain_levels():
    e, _ = L.branch_levels(L.BranchParams(46e9), L.FieldConfig())
    assert np.allclose(e, [-23e9, -23e9, 23e9, 23e9], rtol=0, atol=1e-3)


@given(strained)
def test_kramers_degeneracy_at_zero_field(params):
    e, _ = L.branch_levels(params, L.FieldConfig())
    assert e[1] - e[0] <= 1e-6 * max(1.0, abs(e).max()) * 1e-3 + 1e-3
    assert e[3] - e[2] <= 1e-6 * max(1.0, abs(e).max()) * 1e-3 + 1e-3


@given(st.floats(1e9, 500e9), st.floats(0, 1), st.floats(0, 10))
def test_aligned_field_levels_match_closed_form(so, q, b):
    # zero strain: H is diagonal, entries -so/2 Lz Sz + q mu_B B Lz + mu_B B Sz (g_s = 2)
    params = L.BranchParams(so, orbital_g_quench=q)
    e, _ = L.branch_levels(params, L.FieldConfig(b))
    expected = sorted(-so / 2 * lz * sz + q * MU_B * b * lz + MU_B * b * sz
                      for lz in (1, -1) for sz in (1, -1))
    assert np.allclose(e, expected, rtol=1e-12, atol=1e-3)


@given(st.floats(1e9, 100e9), st.floats(-200e9, 200e9), st.floats(-200e9, 200e9))
def test_strain_orbital_splitting(so, alpha, beta):
    e, _ = L.branch_levels(L.BranchParams(so, alpha, beta), L.FieldConfig())
    expected = math.sqrt(so**2 + 4 * (alpha**2 + beta**2))
    assert e[2] - e[1] == pytest.approx(expected, rel=1e-9)


def test_zero_field_line_is_degenerate():
    ts = L.transition_spectrum(L.GROUND, L.EXCITED, L.FieldConfig(0.0))
    assert ts.degenerate
    assert np.all(ts.offsets == 0.0)
    assert ts.splitting == 0.0


def test_labels_ascend_and_strengths_bounded():
    ts = L.transition_spectrum(L.GROUND, L.EXCITED, L.FieldConfig(3.0))
    assert [t.label for t in ts.transitions] == ["C1", "C2", "C3", "C4"]
    assert np.all(np.diff(ts.offsets) >= 0)
    assert all(0 <= t.dipole_strength <= 1 for t in ts.transitions)
    assert [t.spin_conserving for t in ts.transitions] == [False, True, True, False]
    with pytest.raises(KeyError):
        ts["C5"]


@given(st.floats(0.1, 8), st.floats(0, 0.4))
def test_two_spin_conserving_lines_for_aligned_field(b, strain_frac):
    ground = L.BranchParams(46e9, strain_alpha=strain_frac * 46e9)
    ts = L.transition_spectrum(ground, L.EXCITED, L.FieldConfig(b))
    strong = [t for t in ts.transitions if t.dipole_strength > 0.5]
    assert len(strong) == 2
    assert {t.label for t in strong} == {"C2", "C3"}


def test_linear_splitting_at_zero_strain():
    excited = L.BranchParams(255e9, orbital_g_quench=0.2)
    ser = L.splitting_vs_field(L.GROUND, excited, np.linspace(0, 5, 11))
    # oracle: spin terms cancel for spin-conserving lines; orbital terms differ by (0.2-0.1) mu_B B
    # on each doublet, and the two lines sit at +- that shift, so the splitting is 2 * 0.1 mu_B B
    assert ser.slope == pytest.approx(2 * 0.1 * MU_B, rel=1e-9)
    assert np.max(np.abs(ser.splittings - ser.slope * ser.fields)) <= 1e-9 * ser.splittings.max()
    s21 = L.transition_spectrum(L.GROUND, excited, L.FieldConfig(2.1)).splitting
    s32 = L.transition_spectrum(L.GROUND, excited, L.FieldConfig(3.2)).splitting
    assert s21 / s32 == pytest.approx(2.1 / 3.2, rel=1e-9)


def test_splitting_vs_field_errors_and_trivial():
    with pytest.raises(ValueError):
        L.splitting_vs_field(L.GROUND, L.EXCITED, [])
    with pytest.raises(ValueError):
        L.splitting_vs_field(L.GROUND, L.EXCITED, [2.0, 1.0])
    assert L.splitting_vs_field(L.GROUND, L.EXCITED, [0.0]).splittings.tolist() == [0.0]


def test_linear_slope_exact():
    x = np.array([0.0, 1.0, 2.5, 4.0])
    assert L.linear_slope(x, 3.7e9 * x) == pytest.approx(3.7e9, rel=1e-12)


@pytest.mark.parametrize("excited", [L.EXCITED, L.BranchParams(255e9, orbital_g_quench=0.2)])
def test_small_misalignment_reduces_splitting(excited):
    # holds for small tilts only; larger angles mix spin and grow the gap again
    ground = L.BranchParams(46e9, strain_alpha=11.9e9) if excited is L.EXCITED else L.GROUND
    aligned = L.transition_spectrum(ground, excited, L.FieldConfig(3.2, 0.0)).splitting
    tilted = [L.transition_spectrum(ground, excited, L.FieldConfig(3.2, th)).splitting
              for th in (0.02, 0.05, 0.1)]
    assert aligned > tilted[0] > tilted[1] > tilted[2]


@given(st.floats(0, 6), st.floats(0, 6))
@settings(max_examples=40)
def test_aligned_splitting_monotone(b1, b2):
    ground = L.BranchParams(46e9, strain_alpha=11.9e9)
    lo, hi = sorted((b1, b2))
    s_lo = L.transition_spectrum(ground, L.EXCITED, L.FieldConfig(lo)).splitting
    s_hi = L.transition_spectrum(ground, L.EXCITED, L.FieldConfig(hi)).splitting
    assert s_hi >= s_lo - 1e-3


@given(strained, strained, fields, st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_transition_frequencies_basis_independent(ground, excited, field, seed):
    zero = dataclasses.replace(field, magnitude=0.0)
    hg, hg0 = L.build_branch_hamiltonian(ground, field), L.build_branch_hamiltonian(ground, zero)
    he, he0 = L.build_branch_hamiltonian(excited, field), L.build_branch_hamiltonian(excited, zero)
    u = unitary_group.rvs(4, random_state=np.random.default_rng(seed))
    rot = [u @ h @ u.conj().T for h in (hg, hg0, he, he0)]
    a = L.transition_frequencies(hg, hg0, he, he0)
    b = L.transition_frequencies(*rot)
    scale = max(np.abs(a).max(), 1.0)
    assert np.allclose(np.sort(a.ravel()), np.sort(b.ravel()), rtol=0, atol=1e-6 * scale + 1.0)


def test_solver_places_c3():
    ground, excited = L.solve_line_offset(0.6e9, L.FieldConfig(3.2))
    ts = L.transition_spectrum(ground, excited, L.FieldConfig(3.2))
    assert ts["C3"].offset == pytest.approx(0.6e9, abs=1e3)
    assert ground.strain_alpha > 0
    assert excited == L.EXCITED


def test_solver_argument_errors():
    with pytest.raises(ValueError):
        L.solve_line_offset(0.6e9, L.FieldConfig(3.2), branch="middle")
    with pytest.raises(ValueError):
        L.solve_line_offset(1e15, L.FieldConfig(3.2))


def test_parameter_validation():
    with pytest.raises(ValueError):
        L.BranchParams(-1.0)
    with pytest.raises(ValueError):
        L.BranchParams(1e9, orbital_g_quench=1.5)
    with pytest.raises(ValueError):
        L.FieldConfig(-1.0)
    with pytest.raises(ValueError):
        L.FieldConfig(1.0, polar_angle=4.0)
