"""
Which protocol family does best?
================================

Each variant restricts which access probabilities may be tuned. The fully
flexible one can mimic every other variant, so after optimisation it should
never lose to any of them. The perfect-sensing bound caps everything.
"""

from cogaccess import OptimizerSettings, ProtocolVariant, default_profile, optimize, default_params

params = default_params()
profile = default_profile()
settings = OptimizerSettings(multistarts=16, seed=0)
cap = 100.0

variants = list(ProtocolVariant)
print("lambda  " + "".join(f"{v.value:>10s}" for v in variants))
for lam in (0.0, 0.1, 0.2, 0.3, 0.4, 0.5):
    row = [optimize(v, lam, profile, params, cap, settings).mu_s for v in variants]
    print(f"{lam:6.2f}  " + "".join(f"{x:10.4f}" for x in row))

best = optimize(ProtocolVariant.PROPOSED, 0.3, profile, params, cap, settings)
print("\noptimal policy at lambda = 0.3:")
print("  omega_0", round(best.policy.omega_0, 4))
print("  omega  ", [round(w, 4) for w in best.policy.omega])
print("  beta   ", [round(x, 4) for x in best.policy.beta])
print(f"  primary delay {best.metrics.delay_p:.2f} slots (cap {cap:g})")
