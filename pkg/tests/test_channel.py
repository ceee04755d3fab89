import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogaccess import INFINITE_RATE, Link, SystemParams, draw_success, num_instants, spectral_efficiency, \
    success_probability
from cogaccess.channel import default_params

from conftest import params_with_instants
from oracles import success_hp

# 40-digit evaluations of the outage formula at the default parameters
P_PRIMARY_T = 0.5322242353943687573621036449554509760824
P_SECONDARY_T = 0.9978999070097569977503753370608354180222


def with_slot(tau_fraction):
    base = default_params()
    return SystemParams(base.noise_density, base.power_primary, base.power_secondary, base.bandwidth_hz,
                        base.slot_seconds, base.slot_seconds * tau_fraction, base.packet_bits)


def test_num_instants_default():
    assert num_instants(default_params()) == 10


def test_num_instants_tau_equals_slot():
    assert num_instants(with_slot(1.0)) == 1


def test_num_instants_rounds_down():
    assert num_instants(with_slot(0.15 / 0.4)) == 2


@pytest.mark.parametrize("field", ["noise_density", "slot_seconds", "packet_bits", "var_secondary_link"])
def test_params_reject_non_positive(field):
    kwargs = dict(noise_density=1e-11, power_primary=3e-12, power_secondary=9e-10, bandwidth_hz=1e7,
                  slot_seconds=4e-4, sensing_quantum_seconds=4e-5, packet_bits=1000)
    kwargs[field] = 0.0
    with pytest.raises(ValueError):
        SystemParams(**kwargs)


def test_params_reject_tau_longer_than_slot():
    with pytest.raises(ValueError, match="sensing_quantum"):
        with_slot(1.5)


def test_spectral_efficiency_examples(params):
    assert spectral_efficiency(params, 0.4e-3) == pytest.approx(0.25, rel=1e-12)
    assert spectral_efficiency(params, 0.2e-3) == pytest.approx(0.5, rel=1e-12)
    assert spectral_efficiency(params, 0.0) == INFINITE_RATE


def test_spectral_efficiency_negative(params):
    with pytest.raises(ValueError):
        spectral_efficiency(params, -1e-4)


def test_success_probability_default_values(params):
    assert success_probability(params, Link.PRIMARY, params.slot_seconds) == pytest.approx(P_PRIMARY_T, abs=1e-12)
    assert success_probability(params, Link.SECONDARY, params.slot_seconds) == pytest.approx(P_SECONDARY_T, abs=1e-12)
    assert abs(P_PRIMARY_T - 0.5322) < 1e-4
    assert abs(P_SECONDARY_T - 0.99790) < 1e-4


def test_success_probability_zero_airtime(params):
    assert success_probability(params, Link.PRIMARY, 0.0) == 0.0
    assert success_probability(params, Link.SECONDARY, 0.0) == 0.0


@pytest.mark.parametrize("k", range(11))
def test_secondary_success_matches_high_precision(params, k):
    tx = params.secondary_tx_seconds(k)
    expected = float(success_hp(params, params.power_secondary, 1.0, tx))
    assert success_probability(params, Link.SECONDARY, tx) == pytest.approx(expected, abs=1e-14)


def test_last_instant_has_no_airtime(params):
    assert params.secondary_tx_seconds(10) == 0.0
    assert params_with_instants(3).secondary_tx_seconds(3) == 0.0


positive = st.floats(min_value=1e-3, max_value=1e3)


@settings(max_examples=200, deadline=None)
@given(power=positive, variance=positive, tx1=st.floats(1e-5, 4e-4), tx2=st.floats(1e-5, 4e-4),
       scale=st.floats(1.0, 10.0))
def test_success_monotonicity(power, variance, tx1, tx2, scale):
    params = SystemParams(1e-11, power * 1e-12, power * 1e-12, 1e7, 4e-4, 4e-5, 1000, variance, variance)
    long_tx, short_tx = max(tx1, tx2), min(tx1, tx2)
    p_long = success_probability(params, Link.PRIMARY, long_tx)
    p_short = success_probability(params, Link.PRIMARY, short_tx)
    assert p_long >= p_short
    assert 0.0 <= p_short <= 1.0
    stronger = SystemParams(1e-11, power * 1e-12 * scale, power * 1e-12, 1e7, 4e-4, 4e-5, 1000,
                            variance * scale, variance)
    assert success_probability(stronger, Link.PRIMARY, short_tx) >= p_short


@settings(max_examples=100, deadline=None)
@given(tx=st.floats(4e-5, 4e-4))
def test_success_strictly_inside_unit_interval(tx):
    params = default_params()
    for link in Link:
        assert 0.0 < success_probability(params, link, tx) < 1.0


def test_draw_success_frequency(params):
    rng = np.random.default_rng(11)
    n = 10**6
    for link in Link:
        p = success_probability(params, link, params.slot_seconds)
        freq = draw_success(rng, params, link, params.slot_seconds, size=n).mean()
        # 99% binomial interval
        assert abs(freq - p) <= 2.576 * math.sqrt(p * (1 - p) / n)


def test_draw_success_zero_airtime_never(params):
    rng = np.random.default_rng(0)
    assert not draw_success(rng, params, Link.SECONDARY, np.zeros(1000)).any()
    assert draw_success(rng, params, Link.SECONDARY, 0.0) is False


def test_draw_success_deterministic(params):
    a = draw_success(np.random.default_rng(5), params, Link.PRIMARY, params.slot_seconds, size=500)
    b = draw_success(np.random.default_rng(5), params, Link.PRIMARY, params.slot_seconds, size=500)
    assert np.array_equal(a, b)


def test_draw_success_per_element_airtime(params):
    rng = np.random.default_rng(3)
    tx = np.repeat([params.slot_seconds, params.secondary_tx_seconds(9)], 200_000)
    ok = draw_success(rng, params, Link.SECONDARY, tx)
    for i, t in enumerate((params.slot_seconds, params.secondary_tx_seconds(9))):
        p = success_probability(params, Link.SECONDARY, t)
        assert abs(ok[i * 200_000:(i + 1) * 200_000].mean() - p) < 3 * math.sqrt(p * (1 - p) / 200_000) + 1e-12
