"""Named residual models used by the fitting pipelines.

A model is ``f(x, *params)``; the registry lets fit documents refer to it by
name.  Parameter order in ``names`` is the positional order of ``func``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from ..dynamics.correlation import g2_analytic_values


@dataclass(frozen=True)
class Model:
    name: str
    func: Callable
    names: Tuple[str, ...]
    units: Dict[str, str] = field(default_factory=dict)


def _linear(x, slope, intercept):
    return slope * x + intercept


def _proportional(x, slope):
    return slope * x


def _lorentzian(x, center, fwhm, amplitude, offset):
    u = 2 * (x - center) / fwhm
    return offset + amplitude / (1 + u * u)


def _double_lorentzian(x, center1, center2, fwhm, amplitude1, amplitude2, offset):
    u1 = 2 * (x - center1) / fwhm
    u2 = 2 * (x - center2) / fwhm
    return offset + amplitude1 / (1 + u1 * u1) + amplitude2 / (1 + u2 * u2)


def _power_broadening(p, gamma0, p_sat):
    return gamma0 * np.sqrt(1 + p / p_sat)


def _saturation(p, r_inf, p_sat, background):
    s = p / p_sat
    return r_inf * s / (1 + s) + background


def _g2_resonant(tau, lifetime, rabi_hz, norm):
    return norm * g2_analytic_values(tau, 1 / lifetime, 2 * np.pi * rabi_hz)


def _binned_decay(t, amplitude, tau, offset, bin_width):
    # bin average of amplitude*exp(-t/tau) + offset over [t, t + bin_width)
    frac = tau / bin_width * -np.expm1(-bin_width / tau)
    return amplitude * np.exp(-t / tau) * frac + offset


def _recovery(x, a_inf, t1):
    # x[:, 0]: dark wait before the pulse, x[:, 1]: decaying amplitude left at the previous pulse end
    wait, left = x[:, 0], x[:, 1]
    return a_inf - (a_inf - left) * np.exp(-wait / t1)


def _purcell_linewidth(profile, gamma_free, broadening_slope):
    # gamma_free * (1 + xi * profile) with broadening_slope = gamma_free * xi, linear in both
    return gamma_free + broadening_slope * profile


MODELS = {
    m.name: m
    for m in [
        Model("linear", _linear, ("slope", "intercept")),
        Model("proportional", _proportional, ("slope",)),
        Model("lorentzian", _lorentzian, ("center", "fwhm", "amplitude", "offset"),
              {"center": "Hz", "fwhm": "Hz", "amplitude": "counts/s", "offset": "counts/s"}),
        Model("double_lorentzian", _double_lorentzian,
              ("center1", "center2", "fwhm", "amplitude1", "amplitude2", "offset"),
              {"center1": "Hz", "center2": "Hz", "fwhm": "Hz"}),
        Model("power_broadening", _power_broadening, ("gamma0", "p_sat"), {"gamma0": "Hz", "p_sat": "W"}),
        Model("saturation", _saturation, ("r_inf", "p_sat", "background"),
              {"r_inf": "counts/s", "p_sat": "W", "background": "counts/s"}),
        Model("g2_resonant", _g2_resonant, ("lifetime", "rabi_hz", "norm"), {"lifetime": "s", "rabi_hz": "Hz"}),
        Model("binned_decay", _binned_decay, ("amplitude", "tau", "offset", "bin_width"),
              {"amplitude": "counts/s", "tau": "s", "offset": "counts/s", "bin_width": "s"}),
        Model("recovery", _recovery, ("a_inf", "t1"), {"a_inf": "counts/s", "t1": "s"}),
        Model("purcell_linewidth", _purcell_linewidth, ("gamma_free", "broadening_slope"),
              {"gamma_free": "Hz", "broadening_slope": "Hz"}),
    ]
}
