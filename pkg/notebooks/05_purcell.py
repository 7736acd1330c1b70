# %% [markdown]
# # Purcell enhancement from linewidth against cavity length

# %%
from sivtwin import scenarios as S
from sivtwin.estimation import lifetime_linewidth_bridge, purcell_from_linewidths

for mode in ("fixed", "free"):
    fit = purcell_from_linewidths(S.PURCELL_SERIES, mode=mode, gamma_free=S.GAMMA_FREE_FIXED)
    print(f"{mode:5s}: Fp={fit.purcell:.2f} +- {fit.purcell_sigma:.2f}, free-space width {fit.gamma_free / 1e6:.1f} MHz")
print(f"90 MHz corresponds to a {lifetime_linewidth_bridge(90e6, 'linewidth_to_lifetime') * 1e9:.2f} ns lifetime")
