import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from sivtwin.acceptance import random_state, random_system
from sivtwin.dynamics import lindblad as lb

SM = np.array([[0, 1], [0, 0]], dtype=complex)
EXCITED = np.diag([0.0, 1.0]).astype(complex)


def test_free_decay_is_exponential():
    gamma = 1e9
    system = lb.LindbladSystem(np.zeros((2, 2)), [SM], [gamma])
    t = np.linspace(0, 5e-9, 26)
    traj = lb.lindblad_integrate(system, EXCITED, t)
    assert np.allclose(traj[:, 1, 1].real, np.exp(-gamma * t), rtol=0, atol=1e-9)


def test_undamped_rabi_oscillation():
    omega = 2 * math.pi * 100e6
    system = lb.LindbladSystem(np.array([[0, omega / 2], [omega / 2, 0]]))
    t = np.linspace(0, 30e-9, 61)
    ground = np.diag([1.0, 0.0])
    traj = lb.lindblad_integrate(system, ground, t)
    # RK4 phase error at 1/(50 omega) steps accumulates to ~3e-8 over three periods
    assert np.allclose(traj[:, 1, 1].real, np.sin(omega * t / 2) ** 2, rtol=0, atol=1e-7)


@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
@settings(max_examples=100, deadline=None)
def test_random_system_stays_physical(seed, d):
    rng = np.random.default_rng(seed)
    system, rho0 = random_system(rng, d), random_state(rng, d)
    traj = lb.lindblad_integrate(system, rho0, np.linspace(0, 2.0, 6))
    assert np.abs(np.einsum("tii->t", traj) - 1).max() <= 1e-9
    assert np.abs(traj - np.conj(np.swapaxes(traj, 1, 2))).max() <= 1e-10
    assert min(np.linalg.eigvalsh((m + m.conj().T) / 2).min() for m in traj) >= -1e-9


@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
@settings(max_examples=25, deadline=None)
def test_rk4_agrees_with_matrix_exponential(seed, d):
    rng = np.random.default_rng(seed)
    system, rho0 = random_system(rng, d), random_state(rng, d)
    sup = lb.liouvillian(system)
    traj = lb.lindblad_integrate(system, rho0, [0.0, 1.0])
    exact = (expm(sup) @ rho0.reshape(-1)).reshape(d, d)
    assert np.abs(traj[-1] - exact).max() <= 1e-8


def test_step_halving_converges():
    rng = np.random.default_rng(3)
    system, rho0 = random_system(rng, 4), random_state(rng, 4)
    sup = lb.liouvillian(system)
    dt = 1 / (lb.STEPS_PER_RATE * lb.max_rate(sup))
    full = lb.lindblad_integrate(system, rho0, [0.0, 1.0], max_step=dt)[-1]
    half = lb.lindblad_integrate(system, rho0, [0.0, 1.0], max_step=dt / 2)[-1]
    assert np.abs(full - half).max() < 1e-8


def test_steady_state_is_a_fixed_point():
    rng = np.random.default_rng(11)
    system = random_system(rng, 3)
    rho = lb.steady_state(system)
    assert abs(np.trace(rho) - 1) < 1e-12
    assert np.abs(lb.liouvillian(system) @ rho.reshape(-1)).max() < 1e-10
    late = lb.lindblad_integrate(system, random_state(rng, 3), [0.0, 40.0])[-1]
    assert np.abs(late - rho).max() < 1e-8


def test_driven_two_level_steady_state_closed_form():
    gamma, omega = 1e9, 2 * math.pi * 290e6
    system = lb.LindbladSystem(np.array([[0, omega / 2], [omega / 2, 0]]), [SM], [gamma])
    pe = lb.steady_state(system)[1, 1].real
    assert pe == pytest.approx((omega**2 / 4) / (gamma**2 / 4 + omega**2 / 2), rel=1e-10)


def test_liouvillian_row_major_convention():
    # d/dt rho = -i[H, rho] checked against the matrix form on a random state
    rng = np.random.default_rng(5)
    system = random_system(rng, 3)
    rho = random_state(rng, 3)
    lhs = (lb.liouvillian(system) @ rho.reshape(-1)).reshape(3, 3)
    h = system.hamiltonian
    rhs = -1j * (h @ rho - rho @ h)
    for op, g in zip(system.collapse_operators, system.rates):
        ldl = op.conj().T @ op
        rhs += g * (op @ rho @ op.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_zero_time_grid_returns_initial_state():
    rng = np.random.default_rng(1)
    system, rho0 = random_system(rng, 2), random_state(rng, 2)
    traj = lb.lindblad_integrate(system, rho0, [0.0])
    assert np.array_equal(traj[0], rho0)


@pytest.mark.parametrize("rho", [
    np.diag([0.7, 0.7]),
    np.diag([1.2, -0.2]),
    np.array([[0.5, 0.5], [0.1, 0.5]]),
])
def test_non_physical_state_rejected(rho):
    system = lb.LindbladSystem(np.zeros((2, 2)), [SM], [1.0])
    with pytest.raises(ValueError, match="non-physical"):
        lb.lindblad_integrate(system, rho, [0.0, 1.0])


def test_system_validation():
    with pytest.raises(ValueError):
        lb.LindbladSystem(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        lb.LindbladSystem(np.zeros((2, 2)), [SM], [-1.0])
    with pytest.raises(ValueError):
        lb.LindbladSystem(np.zeros((2, 2)), [SM], [])
    with pytest.raises(ValueError):
        lb.lindblad_integrate(lb.LindbladSystem(np.zeros((2, 2))), EXCITED, [1.0, 0.0])
    with pytest.raises(ValueError):
        lb.lindblad_integrate(lb.LindbladSystem(np.zeros((3, 3))), EXCITED, [0.0, 1.0])
