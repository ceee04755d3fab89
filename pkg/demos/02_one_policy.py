"""
Evaluating a hand-written access policy
=======================================

An access policy says, for each sensing instant, how likely the secondary
user is to transmit after seeing the channel idle (``omega``) or busy
(``beta``), plus ``omega_0`` for jumping in at the very start of the slot
without sensing. Here we score one policy with the closed forms and then
replay it slot by slot.
"""

from cogaccess import AccessPolicy, access_breakdown, default_profile, evaluate, default_params
from cogaccess.simulator import SimConfig, validate_against_analytic

params = default_params()
profile = default_profile()

# cautious early, bolder once the detector has had time to settle
policy = AccessPolicy(omega_0=0.02,
                      omega=[0.05, 0.05, 0.1, 0.1, 0.2, 0.2, 0.3, 0.3, 0.4, 0.0],
                      beta=[0.0] * 10)
lam = 0.2

m = evaluate(policy, profile, params, lam)
print(f"mu_p = {m.mu_p:.4f}  (primary service per backlogged slot)")
print(f"mu_s = {m.mu_s:.4f}  (secondary packets per slot)")
print(f"P(primary queue empty) = {m.p_empty:.4f}, mean primary delay = {m.delay_p:.2f} slots")

b = access_breakdown(policy, profile)
print("\nwhere the SU transmits, by instant (idle PU / busy PU):")
for k, (i, bz) in enumerate(zip(b.idle, b.busy)):
    print(f"  k={k:2d}  {i:.4f}  {bz:.4f}")
print(f"  silent {b.silent_idle:.4f}  {b.silent_busy:.4f}")

print("\nsimulating 10^6 slots ...")
for c in validate_against_analytic(params, profile, policy, lam, SimConfig(10**6, seed=3)):
    print(f"  {c.quantity:8s} analytic {c.analytic:9.5f}  simulated {c.empirical:9.5f}  z = {c.z:+.2f}")
