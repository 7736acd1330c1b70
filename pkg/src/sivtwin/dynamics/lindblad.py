"""Fixed-step RK4 integration of the Lindblad master equation for small systems.

Conventions: hbar = 1, Hamiltonians in rad/s, and each collapse operator
``L_k`` comes with a rate ``gamma_k`` so that

    d rho/dt = -i[H, rho] + sum_k gamma_k (L_k rho L_k^+ - {L_k^+ L_k, rho}/2).

Density matrices are flattened row-major; the superoperator acts on that
vector.  No matrix exponentials are used: propagation is plain RK4 with a step
no larger than 1/(50 * spectral radius of the Liouvillian).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

STEPS_PER_RATE = 50


@dataclass
class LindbladSystem:
    hamiltonian: np.ndarray
    collapse_operators: list = field(default_factory=list)
    rates: list = field(default_factory=list)
    emission: Optional[int] = None  # index of the photon-emitting collapse operator

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian, dtype=complex)
        h = self.hamiltonian
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
            raise ValueError("hamiltonian must be a square matrix of dimension >= 2")
        if not np.allclose(h, h.conj().T, atol=1e-12 * max(1.0, np.abs(h).max())):
            raise ValueError("hamiltonian is not Hermitian")
        self.collapse_operators = [np.asarray(c, dtype=complex) for c in self.collapse_operators]
        if len(self.rates) != len(self.collapse_operators):
            raise ValueError("one rate per collapse operator required")
        if any(r < 0 for r in self.rates):
            raise ValueError("rates must be non-negative")
        if self.emission is not None and not 0 <= self.emission < len(self.collapse_operators):
            raise ValueError("emission index out of range")

    @property
    def dimension(self) -> int:
        return self.hamiltonian.shape[0]


def liouvillian(system: LindbladSystem) -> np.ndarray:
    d = system.dimension
    eye = np.eye(d)
    h = system.hamiltonian
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in zip(system.collapse_operators, system.rates):
        if rate == 0:
            continue
        ldl = op.conj().T @ op
        sup += rate * (
            np.kron(op, op.conj())
            - 0.5 * np.kron(ldl, eye)
            - 0.5 * np.kron(eye, ldl.T)
        )
    return sup


def max_rate(sup: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(sup))))


def check_density_matrix(rho: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("non-physical state: density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError(f"non-physical state: trace {np.trace(rho).real:.6g} != 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -atol:
        raise ValueError("non-physical state: density matrix is not positive semidefinite")
    return rho


def lindblad_step(sup: np.ndarray, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical RK4 step of dy/dt = sup @ y."""
    k1 = sup @ y
    k2 = sup @ (y + 0.5 * dt * k1)
    k3 = sup @ (y + 0.5 * dt * k2)
    k4 = sup @ (y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def propagate(sup: np.ndarray, y0: np.ndarray, times: Sequence[float], max_step: Optional[float] = None) -> np.ndarray:
    """Vectors sup-evolved from ``times[0]`` to every entry of ``times``.

    Between consecutive output times the interval is split into equal RK4
    steps no longer than ``max_step``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-d grid")
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be non-decreasing")
    if max_step is None:
        rate = max_rate(sup)
        max_step = 1 / (STEPS_PER_RATE * rate) if rate > 0 else np.inf
    out = np.empty((times.size, y0.size), dtype=complex)
    y = np.array(y0, dtype=complex)
    out[0] = y
    for i in range(1, times.size):
        span = times[i] - times[i - 1]
        if span > 0:
            n = max(1, int(np.ceil(span / max_step)))
            dt = span / n
            for _ in range(n):
                y = lindblad_step(sup, y, dt)
        out[i] = y
    return out


def lindblad_integrate(
    system: LindbladSystem,
    rho0: np.ndarray,
    times: Sequence[float],
    max_step: Optional[float] = None,
) -> np.ndarray:
    """Density-matrix trajectory, shape (len(times), d, d), starting at ``times[0]``."""
    d = system.dimension
    rho0 = check_density_matrix(rho0)
    if rho0.shape != (d, d):
        raise ValueError(f"initial state has shape {rho0.shape}, expected {(d, d)}")
    sup = liouvillian(system)
    traj = propagate(sup, rho0.reshape(-1), times, max_step)
    return traj.reshape(-1, d, d)


def steady_state(system: LindbladSystem) -> np.ndarray:
    """Null vector of the Liouvillian with unit trace (least squares, no propagation)."""
    d = system.dimension
    sup = liouvillian(system)
    trace_row = np.eye(d).reshape(1, -1).astype(complex)
    a = np.vstack([sup, trace_row])
    b = np.zeros(d * d + 1, dtype=complex)
    b[-1] = 1
    vec, *_ = np.linalg.lstsq(a, b, rcond=None)
    rho = vec.reshape(d, d)
    return 0.5 * (rho + rho.conj().T)


def expectation(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Tr(op rho) for a single state or a stack of states."""
    return np.einsum("ij,...ji->...", op, rho)
