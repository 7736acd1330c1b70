# %% [markdown]
# # Linewidth from a power-broadening series
# Simulated resonant scans at increasing drive, Lorentzian fits, and the zero-power extrapolation.

# %%
from sivtwin import scenarios as S
from sivtwin.estimation import fit_lorentzian, linewidth_from_scans

sweep = S.power_sweep(seed=0)
for p, spec in zip(sweep.powers, sweep.spectra):
    fit = fit_lorentzian(spec, poisson_weights=True)
    print(f"P/Psat={p:5.2f}  FWHM={fit.fwhm / 1e6:6.1f} +- {fit.result.error('fwhm') / 1e6:4.1f} MHz")
est = linewidth_from_scans(sweep.powers, sweep.spectra)
print(f"zero-power width {est.gamma0 / 1e6:.1f} +- {est.gamma0_sigma / 1e6:.1f} MHz")

# %% [markdown]
# Line-centre stability over 90 s of repeated scans.

# %%
import numpy as np

centres = np.array([fit_lorentzian(s).center for s in S.stability_scans(seed=0)])
print("centre spread (MHz):", np.round((centres - centres.mean()) / 1e6, 2))
