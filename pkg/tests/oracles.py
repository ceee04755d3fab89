"""Reference computations kept independent of the package's code paths."""

import mpmath
import numpy as np

mpmath.mp.dps = 40


def success_hp(params, power, variance, tx_seconds):
    """Decoding probability at 40 significant digits, straight from the outage definition."""
    if tx_seconds == 0:
        return mpmath.mpf(0)
    rate = mpmath.mpf(params.packet_bits) / (mpmath.mpf(params.bandwidth_hz) * mpmath.mpf(tx_seconds))
    n0 = mpmath.mpf(params.noise_density)
    return mpmath.exp(-n0 * (mpmath.mpf(2) ** rate - 1) / (mpmath.mpf(variance) * mpmath.mpf(power)))


def success_monte_carlo(params, power, variance, tx_seconds, n, seed):
    """Fraction of ``n`` exponential gains whose capacity beats the rate, and its standard error."""
    gains = np.random.default_rng(seed).exponential(variance, n)
    rate = params.packet_bits / (params.bandwidth_hz * tx_seconds)
    hits = np.log2(1.0 + power * gains / params.noise_density) > rate
    p = hits.mean()
    return p, np.sqrt(p * (1 - p) / n)


def event_tree(policy, profile, params, lambda_p, ps_of_instant, p_ok_primary):
    """Enumerate every path of the SU's decisions inside one slot.

    Each level branches on the sensed state and on the access coin. Returns
    ``(mu_p, mu_s)`` where ``mu_s`` weights idle-slot successes by the
    empty-queue probability.
    """
    m = len(policy.omega)

    def walk(k, prob, pu_active):
        # yields (probability, access instant or None)
        if k > m:
            yield prob, None
            return
        if pu_active:
            flag_busy = 1.0 - profile.p_md[k - 1]
        else:
            flag_busy = profile.p_fa[k - 1]
        for sensed_busy, p_sense in ((True, flag_busy), (False, 1.0 - flag_busy)):
            p_go = policy.beta[k - 1] if sensed_busy else policy.omega[k - 1]
            for go, p_coin in ((True, p_go), (False, 1.0 - p_go)):
                weight = prob * p_sense * p_coin
                if weight == 0.0:
                    continue
                if go:
                    yield weight, k
                else:
                    yield from walk(k + 1, weight, pu_active)

    def paths(pu_active):
        out = [(policy.omega_0, 0)]
        out.extend(walk(1, 1.0 - policy.omega_0, pu_active))
        return out

    silent_busy = sum(p for p, inst in paths(True) if inst is None)
    mu_p = p_ok_primary * silent_busy
    idle = sum(p * ps_of_instant(inst) for p, inst in paths(False) if inst is not None)
    return mu_p, (1.0 - lambda_p / mu_p) * idle
