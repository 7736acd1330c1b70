from .correlation import (
    CorrelationTrace,
    TwoLevelParams,
    g2_analytic,
    g2_analytic_values,
    g2_measured,
    g2_numeric,
    mirror,
    signal_fraction,
    simulate_g2_histogram,
    solve_signal_fraction,
    steady_state_population,
    two_level_system,
)
from .lindblad import LindbladSystem, lindblad_integrate, lindblad_step, liouvillian, steady_state
from .ple import (
    PLEModel,
    Spectrum,
    lorentzian,
    power_broadened_fwhm,
    saturation_count_rate,
    saturation_from_fwhm,
    simulate_ple_scan,
)
