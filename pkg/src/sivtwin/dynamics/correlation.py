"""Second-order photon correlation g2(tau) of a driven two-level emitter.

Three routes are provided: the closed-form resonant result, a numeric
evaluation by the quantum regression theorem on any :class:`LindbladSystem`,
and a detector model (uncorrelated background plus Gaussian timing jitter)
that maps an ideal trace onto what a start-stop histogram would show.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .lindblad import LindbladSystem, expectation, liouvillian, propagate, steady_state


@dataclass(frozen=True)
class TwoLevelParams:
    decay_rate: float  # 1/s, total spontaneous decay
    rabi_frequency: float  # rad/s
    pure_dephasing: float = 0.0  # 1/s, extra coherence decay
    detuning: float = 0.0  # Hz

    def __post_init__(self):
        if self.decay_rate <= 0:
            raise ValueError("decay_rate must be positive")
        if self.rabi_frequency < 0 or self.pure_dephasing < 0:
            raise ValueError("rabi_frequency and pure_dephasing must be >= 0")

    @classmethod
    def from_lifetime(cls, lifetime: float, rabi_hz: float, **kw) -> "TwoLevelParams":
        """Build from an optical lifetime (s) and a Rabi frequency Omega/2pi (Hz)."""
        return cls(decay_rate=1 / lifetime, rabi_frequency=2 * math.pi * rabi_hz, **kw)

    @property
    def lifetime(self) -> float:
        return 1 / self.decay_rate


@dataclass
class CorrelationTrace:
    tau: np.ndarray
    g2: np.ndarray
    sigma: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.g2 = np.asarray(self.g2, dtype=float)
        if self.tau.shape != self.g2.shape:
            raise ValueError("tau and g2 must have equal length")
        if self.tau.size > 1 and np.any(np.diff(self.tau) <= 0):
            raise ValueError("tau grid must be strictly increasing")
        if self.sigma is not None:
            self.sigma = np.asarray(self.sigma, dtype=float)


def two_level_system(params: TwoLevelParams) -> LindbladSystem:
    """Driven two-level atom in the rotating frame; basis (|g>, |e>).

    Pure dephasing enters as sigma_z with rate gamma_phi/2, which damps the
    coherence at gamma_phi on top of the radiative Gamma/2.
    """
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.array([[-1, 0], [0, 1]], dtype=complex)
    delta = 2 * math.pi * params.detuning
    h = np.array(
        [[0, params.rabi_frequency / 2], [params.rabi_frequency / 2, -delta]],
        dtype=complex,
    )
    ops, rates = [sm], [params.decay_rate]
    if params.pure_dephasing > 0:
        ops.append(sz)
        rates.append(params.pure_dephasing / 2)
    return LindbladSystem(hamiltonian=h, collapse_operators=ops, rates=rates, emission=0)


def steady_state_population(params: TwoLevelParams) -> float:
    """Excited population (Omega^2/4) / (Delta^2 + Gamma^2/4 + Omega^2/2), no dephasing."""
    delta = 2 * math.pi * params.detuning
    w2 = params.rabi_frequency**2
    return (w2 / 4) / (delta**2 + params.decay_rate**2 / 4 + w2 / 2)


def g2_analytic_values(tau, decay_rate: float, rabi_frequency: float) -> np.ndarray:
    """Resonant g2(|tau|) with the 3Gamma/4 envelope; under-, critically and over-damped."""
    t = np.abs(np.asarray(tau, dtype=float))
    a = 0.75 * decay_rate
    disc = rabi_frequency**2 - decay_rate**2 / 16
    env = np.exp(-a * t)
    if disc > 0:
        w = math.sqrt(disc)
        return 1 - env * (np.cos(w * t) + a / w * np.sin(w * t))
    if disc < 0:
        k = math.sqrt(-disc)
        # cosh/sinh written with decaying exponentials to avoid overflow at large t
        e_minus = np.exp(-(a + k) * t)
        e_plus = np.exp(-(a - k) * t)
        return 1 - 0.5 * ((1 + a / k) * e_plus + (1 - a / k) * e_minus)
    return 1 - env * (1 + a * t)


def g2_analytic(params: TwoLevelParams, tau_grid: Sequence[float]) -> CorrelationTrace:
    if params.detuning != 0 or params.pure_dephasing != 0:
        raise ValueError("closed-form g2 needs resonant drive without pure dephasing")
    tau = np.asarray(tau_grid, dtype=float)
    values = g2_analytic_values(tau, params.decay_rate, params.rabi_frequency)
    return CorrelationTrace(tau, values, metadata={"model": "analytic", "params": vars(params)})


def g2_numeric(system: LindbladSystem, tau_grid: Sequence[float], max_step: Optional[float] = None) -> CorrelationTrace:
    """g2(tau) by quantum regression from the steady state, tau >= 0."""
    if system.emission is None:
        raise ValueError("system has no designated emission operator")
    tau = np.asarray(tau_grid, dtype=float)
    if np.any(tau < 0):
        raise ValueError("g2_numeric evaluates tau >= 0 only; mirror afterwards")
    d = system.dimension
    sm = system.collapse_operators[system.emission]
    n_op = sm.conj().T @ sm
    rho_ss = steady_state(system)
    n_ss = expectation(n_op, rho_ss).real
    if n_ss <= 0:
        raise ValueError("steady state has no emission")
    conditioned = (sm @ rho_ss @ sm.conj().T).reshape(-1)
    # propagate from tau=0 even if the grid starts later
    grid = np.concatenate([[0.0], tau]) if tau.size == 0 or tau[0] > 0 else tau
    vecs = propagate(liouvillian(system), conditioned, grid, max_step)
    if grid is not tau:
        vecs = vecs[1:]
    g2 = expectation(n_op, vecs.reshape(-1, d, d)).real / n_ss**2
    return CorrelationTrace(tau, g2, metadata={"model": "regression", "dimension": d})


def signal_fraction(signal_to_background: float) -> float:
    """rho = S/(S+B) from the ratio S/B."""
    if signal_to_background <= 0:
        raise ValueError("signal_to_background must be positive")
    if math.isinf(signal_to_background):
        return 1.0
    return signal_to_background / (1 + signal_to_background)


def _gaussian_blur(tau: np.ndarray, values: np.ndarray, fwhm: float) -> np.ndarray:
    # values are even in tau; mirror, convolve with a sampled Gaussian, keep tau >= 0
    step = np.diff(tau)
    if tau[0] != 0 or not np.allclose(step, step[0], rtol=1e-9, atol=0):
        raise ValueError("instrument-response convolution needs a uniform grid starting at tau=0")
    dt = step[0]
    sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
    half = int(math.ceil(5 * sigma / dt))
    k = np.arange(-half, half + 1) * dt
    kernel = np.exp(-0.5 * (k / sigma) ** 2)
    kernel /= kernel.sum()
    full = np.concatenate([values[:0:-1], values])
    padded = np.pad(full, half, mode="edge")
    blurred = np.convolve(padded, kernel, mode="valid")
    return blurred[values.size - 1:]


def detector_response(tau, g2, rho: float, irf_fwhm: float = 0.0) -> np.ndarray:
    """Background mixing 1 + rho^2 (g2 - 1), then Gaussian timing jitter."""
    mixed = 1 + rho**2 * (np.asarray(g2, dtype=float) - 1)
    if irf_fwhm > 0:
        mixed = _gaussian_blur(np.asarray(tau, dtype=float), mixed, irf_fwhm)
    return mixed


def g2_measured(ideal: CorrelationTrace, signal_to_background: float, irf_fwhm: float = 0.0) -> CorrelationTrace:
    rho = signal_fraction(signal_to_background)
    values = detector_response(ideal.tau, ideal.g2, rho, irf_fwhm)
    meta = dict(ideal.metadata, signal_fraction=rho, irf_fwhm=irf_fwhm)
    return CorrelationTrace(ideal.tau.copy(), values, metadata=meta)


def solve_signal_fraction(ideal: CorrelationTrace, target_min: float, irf_fwhm: float = 0.0, xtol: float = 1e-12) -> float:
    """Signal fraction rho in (0, 1] at which the measured dip bottoms out at ``target_min``."""
    blurred_ideal = detector_response(ideal.tau, ideal.g2, 1.0, irf_fwhm)
    # mixing is affine in g2 and commutes with the (normalised) blur
    depth = 1 - blurred_ideal.min()
    want = 1 - target_min
    if not 0 < want <= depth:
        raise ValueError(f"dip of {target_min} unreachable: deepest achievable is {1 - depth:.4g}")
    return brentq(lambda r: detector_response(ideal.tau, ideal.g2, r, irf_fwhm).min() - target_min, 1e-9, 1.0, xtol=xtol)


def mirror(trace: CorrelationTrace) -> CorrelationTrace:
    """Extend a tau >= 0 trace to negative delays using g2(-tau) = g2(tau)."""
    if trace.tau[0] < 0:
        raise ValueError("trace already contains negative delays")
    start = 1 if trace.tau[0] == 0 else 0
    tau = np.concatenate([-trace.tau[start:][::-1], trace.tau])
    g2 = np.concatenate([trace.g2[start:][::-1], trace.g2])
    sigma = None
    if trace.sigma is not None:
        sigma = np.concatenate([trace.sigma[start:][::-1], trace.sigma])
    return CorrelationTrace(tau, g2, sigma, dict(trace.metadata))


def simulate_g2_histogram(
    params: TwoLevelParams,
    tau_grid: Sequence[float],
    coincidences_per_bin: float,
    seed: Optional[int] = None,
    signal_to_background: float = math.inf,
    irf_fwhm: float = 0.0,
) -> CorrelationTrace:
    """Normalised coincidence histogram with Poisson noise.

    ``tau_grid`` holds bin centres and may be symmetric around zero;
    ``coincidences_per_bin`` is the expected count at g2 = 1.  With
    ``seed=None`` the noiseless expectation is returned.
    """
    tau = np.asarray(tau_grid, dtype=float)
    pos = np.unique(np.abs(tau))
    ideal = g2_analytic(params, pos)
    if irf_fwhm > 0:
        step = np.diff(pos)
        if pos[0] != 0 or not np.allclose(step, step[0]):
            raise ValueError("IRF blur needs a uniform grid through tau=0")
    model = g2_measured(ideal, signal_to_background, irf_fwhm).g2
    expected = coincidences_per_bin * np.interp(np.abs(tau), pos, model)
    if seed is None:
        counts = expected
    else:
        counts = np.random.default_rng(seed).poisson(expected).astype(float)
    sigma = np.sqrt(np.maximum(counts, 1.0)) / coincidences_per_bin
    meta = {
        "model": "histogram",
        "seed": seed,
        "coincidences_per_bin": coincidences_per_bin,
        "lifetime": params.lifetime,
        "rabi_hz": params.rabi_frequency / (2 * math.pi),
        "signal_to_background": signal_to_background,
        "irf_fwhm": irf_fwhm,
    }
    return CorrelationTrace(tau, counts / coincidences_per_bin, sigma, meta)
