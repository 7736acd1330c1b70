# %% [markdown]
# # Zeeman structure of the four optical lines
# Line offsets C1..C4 against an aligned magnetic field, and the effect of a small field tilt.

# %%
import numpy as np

from sivtwin import levels
from sivtwin import scenarios as S

ground, excited = S.zeeman_parameters()
for b in np.linspace(0, 4, 5):
    spec = levels.transition_spectrum(ground, excited, levels.FieldConfig(b))
    print(f"B={b:.1f} T  " + "  ".join(f"{k}={spec[k].offset / 1e9:+7.2f} GHz" for k in ("C1", "C2", "C3", "C4")))

# %%
series = levels.splitting_vs_field(ground, excited, list(S.SPLITTING_FIELDS), levels.FieldConfig(0.0))
print("splitting slope (GHz/T):", series.slope / 1e9)
for angle in (0.0, 0.05, 0.1):
    tilted = levels.splitting_vs_field(ground, excited, [3.2], levels.FieldConfig(0.0, angle))
    print(f"tilt {angle:.2f} rad: splitting at 3.2 T = {tilted.splittings[0] / 1e9:.3f} GHz")
