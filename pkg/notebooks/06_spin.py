# %% [markdown]
# # Optical spin pumping and spin relaxation
# A single pumping pulse gives the initialisation time and fidelity; a train with growing gaps gives T1.

# %%
from sivtwin import scenarios as S
from sivtwin import spin

model = S.spin_model()
init = spin.simulate_pulse_train(model, S.init_sequence(), seed=1)
tau, tau_sigma, _ = spin.extract_init_time(init)
fid = spin.init_fidelity(init, model=model)
print(f"tau_init = {tau * 1e9:.1f} +- {tau_sigma * 1e9:.1f} ns (truth {model.init_time * 1e9:.1f})")
print(f"fidelity: count ratio {fid.count_ratio:.3f}, model {fid.model_fidelity:.3f}")

# %%
recovery = spin.simulate_pulse_train(model, S.recovery_sequence(), seed=2)
t1 = spin.extract_t1(recovery)
print(f"T1 = {t1.t1 * 1e9:.0f} +- {t1.t1_sigma * 1e9:.0f} ns (truth {model.t1_spin * 1e9:.0f})")
