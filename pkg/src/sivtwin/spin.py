"""All-optical spin pumping on a spin-conserving line: rate model, pulse trains, extraction.

Two-state model of the spin populations.  Under illumination the bright
(fluorescing) spin state p_down is pumped away at ``pump_rate`` while T1
relaxation pulls the populations back to the unpolarised 1/2-1/2 mixture:

    dp/dt = -pump_rate * p - (p - 1/2) / T1       (laser on)
    dp/dt = -(p - 1/2) / T1                        (laser off)

The optical excited state is adiabatically eliminated; fluorescence during
a pulse is ``counts_per_population * p_down + background``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .estimation.leastsq import FitOptions, FitProblem, FitResult, least_squares


@dataclass(frozen=True)
class PumpModel:
    pump_rate: float  # 1/s
    t1_spin: float  # s
    initial_p_down: float = 0.5
    counts_per_population: float = 1e6  # counts/s for p_down = 1
    background: float = 0.0  # counts/s

    def __post_init__(self):
        if self.pump_rate < 0:
            raise ValueError("pump_rate must be >= 0")
        if self.t1_spin <= 0:
            raise ValueError("t1_spin must be positive")
        if not 0 <= self.initial_p_down <= 1:
            raise ValueError("initial_p_down must lie in [0, 1]")
        if self.counts_per_population < 0 or self.background < 0:
            raise ValueError("count rates must be >= 0")

    @classmethod
    def from_init_time(cls, tau_init: float, t1_spin: float, **kw) -> "PumpModel":
        """Pump rate from 1/tau_init = pump_rate + 1/T1."""
        rate = 1 / tau_init - 1 / t1_spin
        if rate < 0:
            raise ValueError("tau_init longer than T1 implies a negative pump rate")
        return cls(pump_rate=rate, t1_spin=t1_spin, **kw)

    @property
    def init_time(self) -> float:
        return 1 / (self.pump_rate + 1 / self.t1_spin)

    @property
    def steady_p_down(self) -> float:
        return 0.5 / self.t1_spin * self.init_time


def pump_dynamics(model: PumpModel, t, p0: Optional[float] = None):
    """p_down(t) under continuous pumping, starting from ``p0`` (default: model's initial value)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    p0 = model.initial_p_down if p0 is None else p0
    p_inf = model.steady_p_down
    out = p_inf + (p0 - p_inf) * np.exp(-t / model.init_time)
    return float(out) if out.ndim == 0 else out


def relax_between_pulses(model: PumpModel, p_down_end, wait):
    wait = np.asarray(wait, dtype=float)
    if np.any(wait < 0):
        raise ValueError("wait must be >= 0")
    out = 0.5 + (np.asarray(p_down_end, dtype=float) - 0.5) * np.exp(-wait / model.t1_spin)
    return float(out) if out.ndim == 0 else out


def model_fidelity(model: PumpModel, pulse_length: float, p0: Optional[float] = None) -> float:
    """Population left in the dark spin state at the end of a pulse."""
    return 1 - pump_dynamics(model, pulse_length, p0)


@dataclass(frozen=True)
class PulseSequence:
    pulse_length: float
    n_pulses: int = 1
    wait_initial: float = 1e-6
    wait_increment: float = 0.0
    bin_width: float = 5e-9
    repetitions: int = 1  # number of averaged sweeps accumulated into the trace
    lead_time: float = 0.0  # dark time before the first pulse

    def __post_init__(self):
        if self.pulse_length <= 0 or self.bin_width <= 0 or self.wait_initial <= 0:
            raise ValueError("pulse_length, wait_initial and bin_width must be positive")
        if self.wait_increment < 0 or self.lead_time < 0:
            raise ValueError("wait_increment and lead_time must be >= 0")
        if self.n_pulses < 1 or self.repetitions < 1:
            raise ValueError("n_pulses and repetitions must be >= 1")
        for name in ("pulse_length", "wait_initial", "wait_increment", "lead_time"):
            ratio = getattr(self, name) / self.bin_width
            if abs(ratio - round(ratio)) > 1e-6:
                raise ValueError(f"{name} must be a whole number of bins")

    def waits(self) -> np.ndarray:
        """Dark period after each pulse; wait k precedes pulse k+1."""
        return self.wait_initial + self.wait_increment * np.arange(self.n_pulses)

    def _bins(self, duration: float) -> int:
        return int(round(duration / self.bin_width))


@dataclass
class FluorescenceTrace:
    time: np.ndarray  # bin start times
    counts: np.ndarray
    expected: np.ndarray
    pulse_bins: list  # (first bin, stop bin) of each pulse
    waits_before: np.ndarray  # dark time before each pulse, nan for the first
    bin_width: float
    repetitions: int = 1
    seed: Optional[int] = None
    metadata: dict = field(default_factory=dict)

    @property
    def exposure(self) -> float:
        return self.bin_width * self.repetitions

    @property
    def rates(self) -> np.ndarray:
        return self.counts / self.exposure

    @property
    def dark_mask(self) -> np.ndarray:
        mask = np.ones(self.time.size, dtype=bool)
        for a, b in self.pulse_bins:
            mask[a:b] = False
        return mask

    def background_rate(self) -> float:
        dark = self.dark_mask
        if not dark.any():
            raise ValueError("trace has no inter-pulse bins for background estimation")
        return float(self.counts[dark].sum() / (dark.sum() * self.exposure))


def _pulse_bin_counts(model: PumpModel, p0: float, n_bins: int, width: float) -> np.ndarray:
    # exact integral of counts_per_population * p(t) + background over each bin
    tau = model.init_time
    p_inf = model.steady_p_down
    t0 = np.arange(n_bins) * width
    decay = tau * (np.exp(-t0 / tau) - np.exp(-(t0 + width) / tau))
    pop_integral = p_inf * width + (p0 - p_inf) * decay
    return model.counts_per_population * pop_integral + model.background * width


def simulate_pulse_train(model: PumpModel, seq: PulseSequence, seed: Optional[int] = None) -> FluorescenceTrace:
    """Binned fluorescence of a pulse train; Poisson counts if ``seed`` is given."""
    w = seq.bin_width
    chunks = [np.full(seq._bins(seq.lead_time), model.background * w)]
    pulse_bins = []
    waits = seq.waits()
    waits_before = np.full(seq.n_pulses, np.nan)
    p = model.initial_p_down
    pos = chunks[0].size
    n_pulse = seq._bins(seq.pulse_length)
    for k in range(seq.n_pulses):
        if k > 0:
            waits_before[k] = waits[k - 1]
        chunks.append(_pulse_bin_counts(model, p, n_pulse, w))
        pulse_bins.append((pos, pos + n_pulse))
        pos += n_pulse
        p = pump_dynamics(model, seq.pulse_length, p)
        n_dark = seq._bins(waits[k])
        chunks.append(np.full(n_dark, model.background * w))
        pos += n_dark
        p = relax_between_pulses(model, p, waits[k])
    expected = np.concatenate(chunks) * seq.repetitions
    if seed is None:
        counts = expected.copy()
    else:
        counts = np.random.default_rng(seed).poisson(expected).astype(float)
    time = np.arange(expected.size) * w
    meta = {"pump_rate": model.pump_rate, "t1_spin": model.t1_spin, "pulse_length": seq.pulse_length}
    return FluorescenceTrace(time, counts, expected, pulse_bins, waits_before, w, seq.repetitions, seed, meta)


@dataclass
class DecayFit:
    tau: float
    tau_sigma: float
    amplitude: float
    amplitude_sigma: float
    offset: float
    pulse_length: float
    result: FitResult

    @property
    def flagged(self) -> bool:
        return not self.result.ok

    def value(self, t):
        return self.amplitude * np.exp(-np.asarray(t) / self.tau) + self.offset

    @property
    def residual_amplitude(self) -> float:
        """Decaying component left at the end of the pulse."""
        return self.amplitude * math.exp(-self.pulse_length / self.tau)


def fit_pulse_decay(trace: FluorescenceTrace, pulse_index: int = 0) -> DecayFit:
    """Single exponential plus offset fitted to the in-pulse bins (bin-averaged model)."""
    a, b = trace.pulse_bins[pulse_index]
    n = b - a
    if n < 10:
        raise ValueError("pulse spans fewer than 10 bins")
    t = trace.time[a:b] - trace.time[a]
    y = trace.rates[a:b]
    s = np.sqrt(np.maximum(trace.counts[a:b], 1.0)) / trace.exposure
    pulse_length = n * trace.bin_width
    k = max(2, n // 5)
    offset0 = float(np.mean(y[-k:]))
    amp0 = float(np.mean(y[:2]) - offset0)
    if amp0 > 0:
        below = np.nonzero(y - offset0 < amp0 / math.e)[0]
        tau0 = float(t[below[0]]) if below.size and below[0] > 0 else pulse_length / 5
    else:
        tau0 = pulse_length / 5
    p0 = {"amplitude": amp0, "tau": tau0, "offset": offset0, "bin_width": trace.bin_width}
    bounds = {"tau": (trace.bin_width / 10, 100 * pulse_length)}
    res = least_squares(FitProblem("binned_decay", t, y, p0, s, bounds=bounds, fixed=("bin_width",)))
    amp, amp_err = res["amplitude"], res.error("amplitude")
    if not (amp > 2 * amp_err) or res["tau"] >= 50 * pulse_length:
        res.flags.append("no_decay")
    return DecayFit(res["tau"], res.error("tau"), amp, amp_err, res["offset"], pulse_length, res)


def extract_init_time(trace: FluorescenceTrace, pulse_index: int = 0):
    """(tau_init, 1-sigma, fit) from the decay during one pulse.

    A pulse without measurable decay comes back with the ``no_decay`` flag on
    ``fit.result``; its tau is meaningless.
    """
    fit = fit_pulse_decay(trace, pulse_index)
    return fit.tau, fit.tau_sigma, fit


@dataclass
class FidelityEstimate:
    count_ratio: float  # 1 - S_end/S_start from background-corrected counts
    s_start: float
    s_end: float
    model_fidelity: Optional[float] = None  # p_up at pulse end, when a model is supplied


def init_fidelity(trace: FluorescenceTrace, pulse_index: int = 0, model: Optional[PumpModel] = None) -> FidelityEstimate:
    """Initialisation fidelity from the start/end fluorescence of a pulse.

    Start and end signals are read off the fitted decay, background corrected
    with the inter-pulse bins.  The count ratio measures how much of the bright
    population was removed; with an unpolarised start it undercounts the
    dark-state population, which is reported separately as ``model_fidelity``.
    """
    fit = fit_pulse_decay(trace, pulse_index)
    bg = trace.background_rate()
    if fit.flagged:
        # degenerate decay fit: fall back to raw early/late bin averages
        a, b = trace.pulse_bins[pulse_index]
        k = max(2, (b - a) // 10)
        rates = trace.rates[a:b]
        s_start = float(rates[:k].mean() - bg)
        s_end = float(rates[-k:].mean() - bg)
    else:
        s_start = float(fit.value(0.0) - bg)
        s_end = float(fit.value(fit.pulse_length) - bg)
    if s_start <= 0:
        raise ValueError("no background-corrected signal at pulse start")
    model_f = None
    if model is not None:
        model_f = model_fidelity(model, fit.pulse_length)
    return FidelityEstimate(1 - s_end / s_start, s_start, s_end, model_f)


@dataclass
class T1Fit:
    t1: float
    t1_sigma: float
    a_inf: float
    waits: np.ndarray
    amplitudes: np.ndarray
    amplitude_sigmas: np.ndarray
    result: FitResult

    @property
    def flagged(self) -> bool:
        return not self.result.ok


def extract_t1(trace: FluorescenceTrace, options: Optional[FitOptions] = None) -> T1Fit:
    """Spin T1 from the recovery of per-pulse decay amplitudes with dark time.

    Each pulse after the first is fitted on its own; its decaying amplitude
    A_k obeys A_k = A_inf - (A_inf - R_{k-1}) exp(-w_k/T1), where R_{k-1}
    is the decaying component still present at the end of the previous pulse
    (zero for fully pumped pulses, which gives A_inf (1 - exp(-w/T1))).
    """
    fits = [fit_pulse_decay(trace, k) for k in range(len(trace.pulse_bins))]
    waits = trace.waits_before[1:]
    amps = np.array([f.amplitude for f in fits[1:]])
    sig = np.array([f.amplitude_sigma for f in fits[1:]])
    left = np.array([f.residual_amplitude for f in fits[:-1]])
    if amps.size < 4:
        raise ValueError(f"need at least 4 recovery amplitudes, got {amps.size}")
    if np.unique(waits).size < 2:
        raise ValueError("waits must take at least two distinct values")
    sig = np.where(np.isfinite(sig) & (sig > 0), sig, np.nanmax(np.abs(amps)) or 1.0)
    x = np.column_stack([waits, left])
    a_inf0 = float(amps.max())
    if not np.all(np.isfinite(amps)) or a_inf0 <= 0:
        raise ValueError("no decaying signal in the recovery pulses")
    frac = np.clip(amps / a_inf0, 1e-3, 1 - 1e-3)
    t1_0 = float(np.median(waits / -np.log1p(-frac)))
    bounds = {"t1": (1e-3 * waits.min(), 1e3 * waits.max())}
    # amplitude sigmas come from the per-pulse fits: use them as absolute errors
    res = least_squares(FitProblem("recovery", x, amps, {"a_inf": a_inf0, "t1": t1_0}, sig, bounds=bounds,
                                   options=options or FitOptions(scale_covariance=False)))
    t1 = res["t1"]
    # curvature is only visible if some wait is comparable to T1
    if math.exp(-waits.min() / t1) < 0.01 or not res.error("t1") < t1:
        res.flags.append("ill_conditioned")
    return T1Fit(t1, res.error("t1"), res["a_inf"], waits, amps, sig, res)
