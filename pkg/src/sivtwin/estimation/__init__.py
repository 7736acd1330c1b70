from .leastsq import FitOptions, FitProblem, FitResult, curve_fit, least_squares
from .models import MODELS, Model
from .pipelines import (
    DoubleLorentzianFit,
    G2Fit,
    LinewidthExtrapolation,
    LinewidthSeries,
    LorentzianFit,
    PurcellFit,
    dc_sensitivity,
    fit_double_lorentzian,
    fit_field_dependence,
    fit_g2,
    fit_lorentzian,
    fit_saturation,
    linewidth_from_scans,
    lifetime_linewidth_bridge,
    purcell_from_linewidths,
    zero_power_linewidth,
)
