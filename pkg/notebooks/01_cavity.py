# %% [markdown]
# # Cavity mode, quality factor and emitter coupling
# Mode geometry and Purcell estimates for the 8 um hemispherical cavity at a few longitudinal orders.

# %%
from sivtwin import cavity
from sivtwin import scenarios as S

for order in (5, 8, 11, 15):
    report = cavity.cavity_report(S.cavity_geometry(order), order, cavity.EmitterCouplingParams())
    d = report.to_dict()
    print(f"q={order:2d}  L={d['geometry']['eff_length'] * 1e6:5.2f} um  "
          f"V={d['mode']['mode_volume_lambda3']:5.2f} lambda^3  Q={d['quality']['q_factor']:7.0f}  "
          f"Fp={d['purcell']['purcell_curved']:5.2f}  beta={d['purcell']['beta']:.3f}")

# %% [markdown]
# Mode-order inference from two adjacent resonances, and the length stability a given finesse demands.

# %%
print(cavity.infer_mode_order(841.9e-9, S.WAVELENGTH))
print(f"length stability bound: {cavity.length_stability_bound(S.FINESSE, S.WAVELENGTH) * 1e12:.1f} pm")
