"""Analysis pipelines: line fits, zero-power extrapolation, Purcell extraction,
g2 fits and dc field sensitivity.  All fits go through :func:`least_squares`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .. import cavity
from ..dynamics.correlation import CorrelationTrace
from ..dynamics.ple import Spectrum
from .leastsq import FitOptions, FitProblem, FitResult, least_squares
from .models import MODELS


@dataclass
class LorentzianFit:
    center: float
    fwhm: float
    amplitude: float
    offset: float
    result: FitResult

    @property
    def flagged(self) -> bool:
        return not self.result.ok


def lorentzian_guess(x: np.ndarray, y: np.ndarray) -> dict:
    """Peak/half-max starting point.

    Centre at the brightest bin, offset from the median of the outer 10 % of
    points on each side, FWHM from the span of points above half maximum.
    """
    order = np.argsort(x)
    x, y = x[order], y[order]
    k = max(1, x.size // 10)
    offset = float(np.median(np.concatenate([y[:k], y[-k:]])))
    i = int(np.argmax(y))
    amp = float(y[i] - offset)
    above = np.nonzero(y >= offset + amp / 2)[0]
    step = float(np.min(np.diff(x))) if x.size > 1 else 1.0
    width = max(float(x[above[-1]] - x[above[0]]), step) if above.size else step
    return {"center": float(x[i]), "fwhm": width, "amplitude": amp, "offset": offset}


def fit_lorentzian(
    spectrum: Spectrum,
    p0: Optional[dict] = None,
    options: Optional[FitOptions] = None,
    poisson_weights: bool = False,
) -> LorentzianFit:
    """Single-line fit.  With ``poisson_weights`` a second pass replaces the
    observed-count errors by sqrt(model counts), which removes the low-count
    bias of weighting by the data themselves.
    """
    fit = _fit_lorentzian_once(spectrum, p0, options)
    if not poisson_weights or fit.flagged:
        return fit
    mu = np.maximum(MODELS["lorentzian"].func(spectrum.abscissa, *fit.result.values) * spectrum.dwell_time, 1.0)
    reweighted = Spectrum(spectrum.abscissa, spectrum.values, np.sqrt(mu) / spectrum.dwell_time,
                          spectrum.dwell_time, spectrum.metadata)
    return _fit_lorentzian_once(reweighted, fit.result.params, options)


def _fit_lorentzian_once(spectrum: Spectrum, p0: Optional[dict], options: Optional[FitOptions]) -> LorentzianFit:
    x, y, s = spectrum.abscissa, spectrum.values, spectrum.sigma
    if x.size < 5:
        raise ValueError("need at least 5 points to fit a line")
    guess = lorentzian_guess(x, y) if p0 is None else dict(p0)
    span = float(np.ptp(x))
    # a line narrower than one grid step is not resolved by the scan
    step = float(np.min(np.diff(np.sort(x))))
    guess["fwhm"] = max(guess["fwhm"], step)
    bounds = {
        "fwhm": (step, 10 * span),
        "center": (float(x.min()) - span, float(x.max()) + span),
    }
    scale = {"center": span, "fwhm": step}
    res = least_squares(FitProblem("lorentzian", x, y, guess, s, bounds=bounds, options=options or FitOptions(), scale=scale))
    if res["fwhm"] <= step * (1 + 1e-9):
        res.flags.append("unresolved")
    k = max(1, x.size // 10)
    order = np.argsort(x)
    edges = np.concatenate([order[:k], order[-k:]])
    baseline_noise = max(float(np.std(y[edges])), float(np.median(s[edges])))
    if res["amplitude"] < 3 * baseline_noise:
        res.flags.append("no_peak")
    p = res.params
    return LorentzianFit(p["center"], abs(p["fwhm"]), p["amplitude"], p["offset"], res)


@dataclass
class DoubleLorentzianFit:
    centers: tuple
    center_sigmas: tuple
    fwhm: float
    result: FitResult


def fit_double_lorentzian(spectrum: Spectrum, centers: Sequence[float], fwhm: float) -> DoubleLorentzianFit:
    """Two lines of shared width; ``centers`` and ``fwhm`` seed the fit."""
    x, y, s = spectrum.abscissa, spectrum.values, spectrum.sigma
    g = lorentzian_guess(x, y)
    c1, c2 = sorted(centers)
    amp1 = float(np.interp(c1, x, y) - g["offset"])
    amp2 = float(np.interp(c2, x, y) - g["offset"])
    p0 = {"center1": c1, "center2": c2, "fwhm": fwhm, "amplitude1": amp1, "amplitude2": amp2, "offset": g["offset"]}
    span = float(np.ptp(x))
    bounds = {"fwhm": (1e-6 * span, span)}
    scale = {"center1": span, "center2": span}
    res = least_squares(FitProblem("double_lorentzian", x, y, p0, s, bounds=bounds, scale=scale))
    p, e = res.params, res.errors
    return DoubleLorentzianFit((p["center1"], p["center2"]), (e["center1"], e["center2"]), p["fwhm"], res)


@dataclass
class LinewidthExtrapolation:
    gamma0: float
    gamma0_sigma: float
    p_sat: float
    result: FitResult


def zero_power_linewidth(powers, fwhms, sigmas=None) -> LinewidthExtrapolation:
    """Fit gamma(P) = gamma0 sqrt(1 + P/P_sat) and return the P -> 0 width."""
    p = np.asarray(powers, dtype=float)
    g = np.asarray(fwhms, dtype=float)
    if np.unique(p).size < 2:
        raise ValueError("all powers equal: zero-power extrapolation undefined")
    if np.unique(p).size < 3:
        raise ValueError("need at least 3 distinct powers")
    # gamma^2 is linear in P: gamma0^2 + (gamma0^2 / P_sat) P gives the start point
    slope, icpt = np.polyfit(p, g * g, 1)
    if icpt > 0 and slope > 0:
        p0 = {"gamma0": math.sqrt(icpt), "p_sat": icpt / slope}
    else:
        g0 = float(np.min(g))
        p0 = {"gamma0": g0, "p_sat": float(np.max(p))}
    bounds = {"gamma0": (0.0, np.inf), "p_sat": (1e-30, np.inf)}
    # sigmas from upstream line fits are absolute; without them, rescale by chi^2
    opts = FitOptions(scale_covariance=sigmas is None)
    res = least_squares(FitProblem("power_broadening", p, g, p0, sigmas, bounds=bounds, options=opts))
    return LinewidthExtrapolation(res["gamma0"], res.error("gamma0"), res["p_sat"], res)


def linewidth_from_scans(powers, spectra) -> LinewidthExtrapolation:
    """Fit every PLE scan of a power sweep, drop flagged fits, extrapolate to zero power."""
    keep_p, fw, sg = [], [], []
    for power, spec in zip(powers, spectra):
        fit = fit_lorentzian(spec, poisson_weights=True)
        if fit.flagged or not np.isfinite(fit.result.error("fwhm")):
            continue
        keep_p.append(power)
        fw.append(fit.fwhm)
        sg.append(fit.result.error("fwhm"))
    return zero_power_linewidth(keep_p, fw, sg)


def fit_saturation(powers, rates, sigmas=None) -> FitResult:
    """R(P) = R_inf (P/P_sat) / (1 + P/P_sat) + background."""
    p = np.asarray(powers, dtype=float)
    r = np.asarray(rates, dtype=float)
    bg = float(r[np.argmin(p)]) if p.min() == 0 else 0.0
    r_inf = float(r.max() - bg)
    half = bg + r_inf / 2
    psat = float(p[np.argmin(np.abs(r - half))]) or float(np.median(p))
    p0 = {"r_inf": 1.3 * r_inf, "p_sat": psat, "background": bg}
    bounds = {"r_inf": (0.0, np.inf), "p_sat": (1e-30, np.inf), "background": (0.0, np.inf)}
    return least_squares(FitProblem("saturation", p, r, p0, sigmas, bounds=bounds))


def lifetime_linewidth_bridge(value: float, direction: str = "lifetime_to_linewidth") -> float:
    """Fourier-limit conversion gamma = 1/(2 pi tau); the same map in both directions."""
    if direction not in ("lifetime_to_linewidth", "linewidth_to_lifetime"):
        raise ValueError(f"unknown direction {direction!r}")
    if value <= 0:
        raise ValueError("value must be positive")
    return 1 / (2 * math.pi * value)


@dataclass
class LinewidthSeries:
    orders: np.ndarray
    fwhm: np.ndarray
    sigma: np.ndarray
    raw: dict = field(default_factory=dict)

    def __post_init__(self):
        self.orders = np.asarray(self.orders, dtype=int)
        self.fwhm = np.asarray(self.fwhm, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if np.any(self.fwhm <= 0):
            raise ValueError("linewidths must be positive")


@dataclass
class PurcellFit:
    purcell: float
    purcell_sigma: float
    gamma_free: float
    gamma_free_sigma: float
    coupling_scale: float
    mode: str
    result: FitResult


def purcell_from_linewidths(
    series: LinewidthSeries,
    roc: float = 8e-6,
    wavelength: float = 736.7e-9,
    finesse: float = 2700.0,
    mode: str = "fixed",
    gamma_free: float = 90e6,
    options: Optional[FitOptions] = None,
) -> PurcellFit:
    """Purcell factor at the shortest length from zero-power linewidths vs length.

    Linewidths follow gamma_cav(L) = gamma_free (1 + xi f_P(L) / penalty(L)),
    with the length dependence taken from the cavity model and a single fitted
    coupling scale xi.  ``mode="fixed"`` pins gamma_free; ``mode="free"``
    fits it.  The reported factor is gamma_cav / gamma_free at the shortest
    length, which equals 1 + xi f_P/penalty there.
    """
    if mode not in ("fixed", "free"):
        raise ValueError("mode must be 'fixed' or 'free'")
    n_len = np.unique(series.orders).size
    if mode == "fixed":
        if gamma_free <= 0:
            raise ValueError("fixed free-space linewidth must be positive")
        if n_len < 1:
            raise ValueError("empty linewidth series")
    elif n_len < 2:
        raise ValueError("free-linewidth fit needs at least 2 cavity lengths")
    profile = cavity.coupling_profile(series.orders, roc, wavelength, finesse)
    shortest = int(np.argmin(series.orders))
    g_free0 = gamma_free if mode == "fixed" else float(series.fwhm.min()) / 2
    slope0 = max(float(np.mean((series.fwhm - g_free0) / profile)), 0.0)
    problem = FitProblem(
        "purcell_linewidth",
        profile,
        series.fwhm,
        {"gamma_free": g_free0, "broadening_slope": slope0},
        series.sigma,
        bounds={"gamma_free": (0.0, np.inf), "broadening_slope": (0.0, np.inf)},
        fixed=("gamma_free",) if mode == "fixed" else (),
        options=options or FitOptions(),
    )
    res = least_squares(problem)
    g_free, slope = res["gamma_free"], res["broadening_slope"]
    g_short = profile[shortest]
    fp = 1 + slope * g_short / g_free
    # F_P = 1 + slope*g/gamma_free -> gradient wrt (gamma_free, broadening_slope)
    jac = np.array([-slope * g_short / g_free**2, g_short / g_free])
    fp_sigma = float(np.sqrt(max(jac @ res.covariance @ jac, 0.0)))
    return PurcellFit(
        purcell=fp,
        purcell_sigma=fp_sigma,
        gamma_free=g_free,
        gamma_free_sigma=res.error("gamma_free"),
        coupling_scale=slope / g_free,
        mode=mode,
        result=res,
    )


@dataclass
class G2Fit:
    lifetime: float
    lifetime_sigma: float
    rabi_hz: float
    rabi_sigma: float
    result: FitResult


def fit_g2(trace: CorrelationTrace, lifetime0: float = 1e-9, rabi0: Optional[float] = None) -> G2Fit:
    """Resonant g2 model fit of a normalised histogram (free normalisation).

    Without ``rabi0`` the first maximum after the dip sets the starting Rabi
    frequency (peak at roughly half an oscillation period).
    """
    tau, g2 = trace.tau, trace.g2
    if rabi0 is None:
        pos = tau >= 0
        t_pos, g_pos = tau[pos], g2[pos]
        dip = int(np.argmin(g_pos))
        after = slice(dip, dip + max(5, t_pos.size // 3))
        t_peak = float(t_pos[after][np.argmax(g_pos[after])] - t_pos[dip])
        rabi0 = 1 / (2 * t_peak) if t_peak > 0 else 1 / lifetime0
    p0 = {"lifetime": lifetime0, "rabi_hz": rabi0, "norm": 1.0}
    bounds = {"lifetime": (1e-12, 1e-6), "rabi_hz": (0.0, np.inf), "norm": (0.0, np.inf)}
    res = least_squares(FitProblem("g2_resonant", tau, g2, p0, trace.sigma, bounds=bounds))
    return G2Fit(res["lifetime"], res.error("lifetime"), res["rabi_hz"], res.error("rabi_hz"), res)


def fit_field_dependence(fields, positions, sigmas) -> FitResult:
    """Straight-line fit of a line position (or splitting) against field, absolute sigmas."""
    b = np.asarray(fields, dtype=float)
    v = np.asarray(positions, dtype=float)
    slope0 = float(np.polyfit(b, v, 1)[0]) if b.size > 1 else 0.0
    opts = FitOptions(scale_covariance=False)
    return least_squares(FitProblem("linear", b, v, {"slope": slope0, "intercept": 0.0}, sigmas, options=opts))


def dc_sensitivity(fit: FitResult, integration_time: float, field: float) -> float:
    """dc field sensitivity sigma_B sqrt(T) in T/sqrt(Hz).

    sigma_B = sigma(dnu)/(d dnu/dB) where sigma(dnu) is the 1-sigma spread of
    the fitted line position at ``field`` propagated from the covariance of a
    ``linear`` fit, and T is the total acquisition time behind the fit.
    """
    if fit.model != "linear":
        raise ValueError("dc_sensitivity expects a linear field-dependence fit")
    slope = fit["slope"]
    if slope == 0:
        raise ValueError("zero slope: field cannot be inferred from the splitting")
    if integration_time <= 0:
        raise ValueError("integration_time must be positive")
    jac = np.array([field, 1.0])
    var = float(jac @ fit.covariance @ jac)
    if not np.isfinite(var):
        raise ValueError("fit covariance is not finite")
    sigma_b = math.sqrt(var) / abs(slope)
    return sigma_b * math.sqrt(integration_time)
