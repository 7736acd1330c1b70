# %% [markdown]
# # dc magnetic-field sensitivity from line splitting scans

# %%
from sivtwin import scenarios as S

dep = S.field_dependence(S.field_scans(seed=0))
for b, x, s in zip(dep.fields, dep.positions, dep.sigmas):
    print(f"B={b:.1f} T  C3 offset {x / 1e9:.3f} GHz +- {s / 1e6:.1f} MHz")
print(f"sensitivity {dep.sensitivity:.3f} T/sqrt(Hz) over {dep.acquisition_time:.0f} s of scanning")
