"""Photoluminescence-excitation lineshapes: power broadening, saturation, shot noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class PLEModel:
    zero_power_fwhm: float  # Hz
    saturation_power: float  # W
    max_rate: float  # counts/s at infinite power
    background_rate: float = 0.0  # counts/s

    def __post_init__(self):
        if self.zero_power_fwhm <= 0:
            raise ValueError("zero_power_fwhm must be positive")
        if min(self.saturation_power, self.max_rate, self.background_rate) < 0:
            raise ValueError("PLE model parameters must be non-negative")

    def saturation(self, power: float) -> float:
        return power / self.saturation_power

    def fwhm(self, power: float) -> float:
        return power_broadened_fwhm(self.zero_power_fwhm, self.saturation(power))

    def peak_rate(self, power: float) -> float:
        """Signal at line centre, background excluded."""
        return saturation_count_rate(self.max_rate, self.saturation(power))


@dataclass
class Spectrum:
    """Frequency-binned count record; ``values`` are rates (counts/s)."""

    abscissa: np.ndarray
    values: np.ndarray
    sigma: np.ndarray
    dwell_time: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.abscissa = np.asarray(self.abscissa, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if not (self.abscissa.shape == self.values.shape == self.sigma.shape):
            raise ValueError("abscissa, values and sigma must have equal length")

    @property
    def counts(self) -> np.ndarray:
        return self.values * self.dwell_time

    @property
    def acquisition_time(self) -> float:
        return self.dwell_time * self.abscissa.size


def power_broadened_fwhm(gamma0: float, s: float) -> float:
    if s < 0:
        raise ValueError("saturation parameter must be >= 0")
    return gamma0 * math.sqrt(1 + s)


def saturation_from_fwhm(gamma0: float, gamma: float) -> float:
    """Inverse of :func:`power_broadened_fwhm`."""
    return (gamma / gamma0) ** 2 - 1


def saturation_count_rate(r_inf: float, s: float, background: float = 0.0) -> float:
    if s < 0:
        raise ValueError("saturation parameter must be >= 0")
    return r_inf * s / (1 + s) + background


def lorentzian(x, center: float, fwhm: float, amplitude: float = 1.0, offset: float = 0.0):
    """Peak-normalised Lorentzian: ``amplitude`` is the height above ``offset``."""
    u = 2 * (np.asarray(x, dtype=float) - center) / fwhm
    return offset + amplitude / (1 + u * u)


def simulate_ple_scan(
    model: PLEModel,
    line_center: Union[float, Sequence[float]],
    grid: Sequence[float],
    power: float,
    dwell_time: float,
    seed: Optional[int] = None,
    weights: Optional[Sequence[float]] = None,
    noiseless: bool = False,
) -> Spectrum:
    """Shot-noise-limited PLE scan over ``grid`` (Hz).

    Several line centres may be given (e.g. Zeeman components); ``weights``
    scale each line's peak rate.  Counts per point are Poisson with mean
    ``rate * dwell_time`` drawn from ``default_rng(seed)``.
    """
    if dwell_time <= 0:
        raise ValueError("dwell_time must be positive")
    centers = np.atleast_1d(np.asarray(line_center, dtype=float))
    w = np.ones_like(centers) if weights is None else np.asarray(weights, dtype=float)
    x = np.asarray(grid, dtype=float)
    fwhm = model.fwhm(power)
    peak = model.peak_rate(power)
    rate = model.background_rate + sum(wi * lorentzian(x, c, fwhm, peak) for c, wi in zip(centers, w))
    mean = rate * dwell_time
    if noiseless:
        counts = mean
    else:
        counts = np.random.default_rng(seed).poisson(mean).astype(float)
    sigma = np.sqrt(np.maximum(counts, 1.0)) / dwell_time
    meta = {
        "kind": "ple",
        "seed": seed,
        "power": power,
        "fwhm": fwhm,
        "line_center": centers.tolist(),
        "noiseless": noiseless,
    }
    return Spectrum(x, counts / dwell_time, sigma, dwell_time, meta)
