"""
Tight delay caps close the window
=================================

A primary delay cap ``D`` turns into a floor on the primary service rate,
``mu_p >= lambda + (1 - lambda) / D``. The silent policy gives the largest
``mu_p`` possible, so once even silence violates the floor no secondary
access is allowed at all.
"""

from cogaccess import OptimizerSettings, ProtocolVariant, default_profile, max_feasible_arrival, optimize, \
    default_params

params = default_params()
profile = default_profile()
settings = OptimizerSettings(multistarts=16)

for cap in (100.0, 10.0, 4.0, 2.0):
    cutoff = max_feasible_arrival(params, profile, cap)
    base = optimize(ProtocolVariant.PROPOSED, 0.0, profile, params, cap, settings).mu_s
    print(f"\ncap {cap:5.0f} slots: secondary access possible for lambda < {cutoff:.4f}")
    for lam in (0.1, 0.2, 0.3, 0.35):
        res = optimize(ProtocolVariant.PROPOSED, lam, profile, params, cap, settings)
        share = res.mu_s / base if base else 0.0
        print(f"  lambda {lam:4.2f}: mu_s {res.mu_s:.4f} ({share:5.1%} of the idle-primary value)")
