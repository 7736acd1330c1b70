# %% [markdown]
# # Driven two-level emitter: master equation and photon correlations
# Steady state of a resonantly driven line, g2 from quantum regression against the closed form,
# and how background light and detector jitter fill in the antibunching dip.

# %%
import numpy as np

from sivtwin.dynamics import correlation as corr

params = corr.TwoLevelParams.from_lifetime(1e-9, 290e6)
tau = np.linspace(0, 10e-9, 101)
numeric = corr.g2_numeric(corr.two_level_system(params), tau)
analytic = corr.g2_analytic(params, tau)
print("excited population:", round(corr.steady_state_population(params), 4))
print("max |regression - closed form|:", np.max(np.abs(numeric.g2 - analytic.g2)))
print("g2 at tau = 0, 1, 2, 5 ns:", np.round(np.interp([0, 1e-9, 2e-9, 5e-9], tau, analytic.g2), 4))

# %%
for sbr in (np.inf, 10.0, 2.0, 1.0):
    for irf in (0.0, 300e-12):
        dip = corr.g2_measured(analytic, sbr, irf).g2[0]
        print(f"signal/background {sbr:>4}, jitter {irf * 1e12:3.0f} ps: g2(0) = {dip:.3f}")
