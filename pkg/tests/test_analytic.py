import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from cogaccess import (AccessPolicy, Link, SensingProfile, SystemParams, UnstableQueueError, access_breakdown,
                       evaluate, is_stable, max_feasible_arrival, perfect_bound, primary_delay,
                       primary_empty_probability, primary_service_rate, secondary_throughput, success_probability)
from cogaccess.analytic import ObjectiveModel, secondary_success_table
from cogaccess.channel import default_params
from cogaccess.sensing import TABLE_I

from conftest import params_with_instants, truncated_profile
from oracles import event_tree, success_hp

P_PRIMARY_T = 0.5322242353943687573621036449554509760824
P_SECONDARY_T = 0.9978999070097569977503753370608354180222


def policies(m):
    prob = st.floats(0.0, 1.0)
    return st.builds(AccessPolicy, prob, st.lists(prob, min_size=m, max_size=m),
                     st.lists(prob, min_size=m, max_size=m))


def test_service_rate_silent_policy(params, profile):
    assert primary_service_rate(AccessPolicy.zeros(10), profile, params) == pytest.approx(P_PRIMARY_T, abs=1e-12)


def test_service_rate_silent_equals_link_success(params, profile):
    assert primary_service_rate(AccessPolicy.zeros(10), profile, params) == \
        success_probability(params, Link.PRIMARY, params.slot_seconds)


def test_service_rate_slot_start_access(params, profile):
    policy = AccessPolicy(1.0, [0.3] * 10, [0.2] * 10)
    assert primary_service_rate(policy, profile, params) == 0.0


def test_service_rate_half_access_m2(params_m2, profile_m2):
    policy = AccessPolicy(0.0, [0.5, 0.5], [0.5, 0.5])
    # each bracket is 0.5 whatever p_md is
    assert primary_service_rate(policy, profile_m2, params_m2) == pytest.approx(P_PRIMARY_T * 0.25, abs=1e-12)
    assert abs(P_PRIMARY_T * 0.25 - 0.1331) < 1e-3


def test_service_rate_length_mismatch(params, profile_m2):
    with pytest.raises(ValueError):
        primary_service_rate(AccessPolicy.zeros(10), profile_m2, params)


@pytest.mark.parametrize("lam, mu, expected", [(0.0, 0.4, 1.0), (0.2, 0.4, 0.5),
                                               (0.3, 0.5322, 0.4362)])
def test_empty_probability(lam, mu, expected):
    assert primary_empty_probability(lam, mu) == pytest.approx(expected, abs=1e-3 if lam == 0.3 else 1e-12)


@pytest.mark.parametrize("lam, mu, expected, tol", [(0.0, 0.4, 2.5, 1e-12), (0.3, 0.5322, 3.015, 1e-2),
                                                    (0.0, 1.0, 1.0, 1e-12)])
def test_delay(lam, mu, expected, tol):
    assert primary_delay(lam, mu) == pytest.approx(expected, abs=tol)


@pytest.mark.parametrize("fn", [primary_delay, primary_empty_probability])
def test_queue_metrics_refuse_unstable(fn):
    with pytest.raises(UnstableQueueError):
        fn(0.5, 0.5)


def test_is_stable_strict():
    assert not is_stable(0.5, 0.5)
    assert is_stable(0.0, 0.1)
    assert is_stable(0.3, 0.5322)


def test_throughput_silent_policy(params, profile):
    assert secondary_throughput(AccessPolicy.zeros(10), profile, params, 0.2) == 0.0


def test_throughput_slot_start_only(params, profile):
    policy = AccessPolicy(1.0, [0.0] * 10, [0.0] * 10)
    # mu_p = 0, so only lambda_p = 0 is admissible and then 1 - 0/0 is not evaluated
    with pytest.raises(UnstableQueueError):
        secondary_throughput(policy, profile, params, 0.0)
    almost = AccessPolicy(1.0 - 1e-12, [0.0] * 10, [0.0] * 10)
    assert secondary_throughput(almost, profile, params, 0.0) == pytest.approx(P_SECONDARY_T, abs=1e-4)


def test_throughput_single_instant():
    params = default_params()
    params = SystemParams(params.noise_density, params.power_primary, params.power_secondary, params.bandwidth_hz,
                          params.slot_seconds, 0.6 * params.slot_seconds, params.packet_bits)
    profile = SensingProfile([0.2], [0.2])
    policy = AccessPolicy(0.0, [1.0], [0.0])
    expected = 0.8 * float(success_hp(params, params.power_secondary, 1.0, 0.4 * params.slot_seconds))
    assert secondary_throughput(policy, profile, params, 0.0) == pytest.approx(expected, abs=1e-13)


def test_last_instant_contributes_nothing(params, profile):
    only_last = AccessPolicy(0.0, [0.0] * 9 + [1.0], [0.0] * 10)
    assert secondary_throughput(only_last, profile, params, 0.0) == 0.0
    assert secondary_success_table(params)[-1] == 0.0


def test_perfect_bound_values(params):
    assert perfect_bound(0.0, params, 100) == pytest.approx(P_SECONDARY_T, abs=1e-12)
    assert perfect_bound(0.52, params, 100) is not None
    assert perfect_bound(0.53, params, 100) is None
    assert perfect_bound(0.37, params, 4) is not None
    assert perfect_bound(0.38, params, 4) is None
    with pytest.raises(ValueError):
        perfect_bound(0.1, params, 1.0)


def test_max_feasible_arrival(params, profile):
    cut100 = (P_PRIMARY_T * 100 - 1) / 99
    cut4 = (P_PRIMARY_T * 4 - 1) / 3
    assert max_feasible_arrival(params, profile, 100) == pytest.approx(cut100, abs=1e-12)
    assert abs(cut100 - 0.5275) < 1e-3
    assert max_feasible_arrival(params, profile, 4) == pytest.approx(cut4, abs=1e-12)
    assert abs(cut4 - 0.3763) < 1e-3
    assert max_feasible_arrival(params, profile, np.inf) == pytest.approx(P_PRIMARY_T, abs=1e-12)
    assert max_feasible_arrival(params, profile, 1.5) == 0.0  # P_p * 1.5 < 1


@settings(max_examples=100, deadline=None)
@given(policy=policies(10), i=st.integers(0, 20), h=st.floats(1e-6, 0.1))
def test_service_rate_non_increasing(policy, i, h):
    params, profile = default_params(), SensingProfile(TABLE_I, TABLE_I)
    x = policy.as_vector()
    up = x.copy()
    up[i] = min(1.0, x[i] + h)
    assert primary_service_rate(AccessPolicy.from_vector(up), profile, params) <= \
        primary_service_rate(policy, profile, params) + 1e-15


@settings(max_examples=100, deadline=None)
@given(policy=policies(10), frac=st.floats(0.0, 0.999))
def test_throughput_below_perfect_bound(policy, frac):
    params, profile = default_params(), SensingProfile(TABLE_I, TABLE_I)
    mu_p = primary_service_rate(policy, profile, params)
    assume(mu_p > 0)
    lam = frac * mu_p
    mu_s = secondary_throughput(policy, profile, params, lam)
    bound = (1 - lam / success_probability(params, Link.PRIMARY, params.slot_seconds)) * \
        success_probability(params, Link.SECONDARY, params.slot_seconds)
    assert 0.0 <= mu_s <= bound + 1e-15


def test_delay_depends_only_on_service_rate(params, profile):
    a = AccessPolicy(0.2, [0.0] * 10, [0.0] * 10)
    target = primary_service_rate(a, profile, params)
    # the same mu_p through a sensing-instant probability instead
    beta = 1.0 - (0.8 - profile.p_md[0]) / (1 - profile.p_md[0])
    b = AccessPolicy(0.0, [0.0] * 10, [beta] + [0.0] * 9)
    assert primary_service_rate(b, profile, params) == pytest.approx(target, rel=1e-12)
    ma, mb = evaluate(a, profile, params, 0.2), evaluate(b, profile, params, 0.2)
    assert ma.delay_p == pytest.approx(mb.delay_p, rel=1e-12)
    assert ma.p_empty == pytest.approx(mb.p_empty, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(omega=st.lists(st.floats(0.0, 1.0), min_size=10, max_size=10))
def test_no_busy_access_throughput_non_negative(omega):
    params, profile = default_params(), SensingProfile(TABLE_I, TABLE_I)
    policy = AccessPolicy(0.0, omega, [0.0] * 10)
    assert secondary_throughput(policy, profile, params, 0.0) >= 0.0


@pytest.mark.parametrize("m", [1, 2, 3])
def test_event_tree_matches_closed_form(m):
    params, profile = params_with_instants(m), truncated_profile(m)
    ps = secondary_success_table(params)
    p_ok = success_probability(params, Link.PRIMARY, params.slot_seconds)
    rng = np.random.default_rng(100 + m)
    for _ in range(30):
        policy = AccessPolicy.from_vector(rng.random(2 * m + 1))
        mu_p = primary_service_rate(policy, profile, params)
        lam = rng.random() * mu_p
        tree_mu_p, tree_mu_s = event_tree(policy, profile, params, lam, lambda k: ps[k], p_ok)
        assert primary_service_rate(policy, profile, params) == pytest.approx(tree_mu_p, abs=1e-12)
        assert secondary_throughput(policy, profile, params, lam) == pytest.approx(tree_mu_s, abs=1e-12)


def test_breakdown_sums(params, profile):
    policy = AccessPolicy(0.1, [0.2] * 10, [0.05] * 10)
    b = access_breakdown(policy, profile)
    assert b.idle[0] == b.busy[0] == 0.1
    assert 0 <= b.silent_idle <= 1 and 0 <= b.silent_busy <= 1
    p_ok = success_probability(params, Link.PRIMARY, params.slot_seconds)
    assert primary_service_rate(policy, profile, params) == pytest.approx(p_ok * b.silent_busy, rel=1e-12)


def test_evaluate_unstable_has_no_queue_metrics(params, profile):
    m = evaluate(AccessPolicy(0.9, [0.0] * 10, [0.0] * 10), profile, params, 0.3)
    assert not m.stable and m.delay_p is None and m.p_empty is None and m.mu_s == 0.0


def test_evaluate_stable_ranges(params, profile):
    m = evaluate(AccessPolicy(0.0, [0.1] * 10, [0.01] * 10), profile, params, 0.1)
    assert m.stable and m.delay_p >= 1 and 0 <= m.p_empty <= 1 and 0 <= m.mu_s <= 1 and 0 <= m.mu_p <= 1


def test_objective_model_matches_dataclass_path(params, profile):
    model = ObjectiveModel(profile, params)
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.random(21) * 0.3
        policy = AccessPolicy.from_vector(x)
        assert model.mu_p(x) == primary_service_rate(policy, profile, params)
        lam = 0.5 * model.mu_p(x)
        value, _ = model.mu_s_grad(x, lam)
        assert value == pytest.approx(secondary_throughput(policy, profile, params, lam), rel=1e-12)


def test_objective_gradients_finite_difference(params, profile):
    model = ObjectiveModel(profile, params)
    rng = np.random.default_rng(9)
    h = 1e-7
    for _ in range(10):
        x = rng.uniform(0.05, 0.3, 21)
        lam = 0.5 * model.mu_p(x)
        for fn in (lambda v: model.mu_p_grad(v), lambda v: model.mu_s_grad(v, lam)):
            _, grad = fn(x)
            for i in range(21):
                e = np.zeros(21)
                e[i] = h
                fd = (fn(x + e)[0] - fn(x - e)[0]) / (2 * h)
                assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-9)
