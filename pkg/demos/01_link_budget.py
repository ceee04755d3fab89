"""
How much airtime does a packet need?
====================================

Both links see Rayleigh block fading, so a packet of ``b`` bits sent in
``tx`` seconds gets through when the instantaneous capacity beats
``b / (W tx)``. Starting later in the slot leaves less airtime and forces a
higher rate. This script prints that decay for the secondary link and checks
one value against a quick Monte Carlo.
"""

import numpy as np

from cogaccess import Link, draw_success, default_params, success_probability

params = default_params()
M = params.num_instants
print(f"slot T = {params.slot_seconds * 1e3:.2f} ms, sensing quantum = {params.sensing_quantum_seconds * 1e6:.0f} us,"
      f" so the SU has M = {M} sensing instants")

# primary always gets the full slot
p_primary = success_probability(params, Link.PRIMARY, params.slot_seconds)
print(f"primary link, full slot: {p_primary:.5f}\n")

print(" k   airtime (us)   rate (b/s/Hz)   P(success)")
for k in range(M + 1):
    tx = params.secondary_tx_seconds(k)
    p = success_probability(params, Link.SECONDARY, tx)
    rate = params.packet_bits / (params.bandwidth_hz * tx) if tx else float("inf")
    print(f"{k:2d}   {tx * 1e6:12.0f}   {rate:13.3f}   {p:.5f}")

# the last instant leaves no airtime at all, hence the zero above

rng = np.random.default_rng(1)
tx = params.secondary_tx_seconds(7)
hits = draw_success(rng, params, Link.SECONDARY, tx, size=10**6)
print(f"\nMonte Carlo at k=7: {hits.mean():.5f} vs closed form "
      f"{success_probability(params, Link.SECONDARY, tx):.5f}")
