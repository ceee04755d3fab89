"""Closed-form primary service rate, queue metrics and secondary throughput.

The SU runs an access cascade inside each slot: at instant 0 it transmits
with probability ``omega_0``; otherwise, at each instant ``k * tau`` it senses
and transmits with ``omega[k]`` when the channel looks idle or ``beta[k]``
when it looks busy. The primary queue is a discrete-time queue with Bernoulli
arrivals served at rate ``mu_p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Link, SystemParams, success_probability
from .sensing import SensingProfile


class UnstableQueueError(ValueError):
    """Raised when a queue metric is requested for ``lambda_p >= mu_p``."""


@dataclass(frozen=True)
class AccessPolicy:
    omega_0: float
    omega: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "omega_0", float(self.omega_0))
        object.__setattr__(self, "omega", tuple(float(v) for v in self.omega))
        object.__setattr__(self, "beta", tuple(float(v) for v in self.beta))
        if len(self.omega) != len(self.beta) or not self.omega:
            raise ValueError("omega and beta must be non-empty and of equal length")
        for v in self.as_vector():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"access probability {v} outside [0, 1]")

    @property
    def m(self) -> int:
        return len(self.omega)

    @classmethod
    def zeros(cls, m: int) -> "AccessPolicy":
        return cls(0.0, (0.0,) * m, (0.0,) * m)

    @classmethod
    def from_vector(cls, x) -> "AccessPolicy":
        """Inverse of :meth:`as_vector`: ``[omega_0, omega_1..M, beta_1..M]``."""
        x = np.asarray(x, dtype=float)
        m = (len(x) - 1) // 2
        if len(x) != 2 * m + 1 or m < 1:
            raise ValueError(f"policy vector must have odd length >= 3, got {len(x)}")
        return cls(x[0], tuple(x[1:m + 1]), tuple(x[m + 1:]))

    def as_vector(self) -> np.ndarray:
        return np.array((self.omega_0, *self.omega, *self.beta))


@dataclass(frozen=True)
class AccessBreakdown:
    """Probability that the SU's cascade ends in a transmission at each instant.

    Index 0 is the slot start; index k is instant ``k * tau``. The remainder
    ``1 - sum`` is the probability of staying silent for the whole slot.
    """

    idle: np.ndarray = field(repr=False)
    busy: np.ndarray = field(repr=False)

    @property
    def silent_idle(self) -> float:
        return 1.0 - float(self.idle.sum())

    @property
    def silent_busy(self) -> float:
        return 1.0 - float(self.busy.sum())


@dataclass(frozen=True)
class AnalyticMetrics:
    mu_p: float
    mu_s: float
    stable: bool
    delay_p: float | None = None
    p_empty: float | None = None
    breakdown: AccessBreakdown | None = field(default=None, repr=False, compare=False)


def _check_lengths(policy: AccessPolicy, profile: SensingProfile, params: SystemParams | None = None):
    if policy.m != profile.m:
        raise ValueError(f"policy has {policy.m} instants but profile has {profile.m}")
    if params is not None and params.num_instants != profile.m:
        raise ValueError(f"profile has {profile.m} instants but T/tau gives {params.num_instants}")


def secondary_success_table(params: SystemParams) -> np.ndarray:
    """Secondary success probability for an access at each instant 0..M."""
    return np.array([success_probability(params, Link.SECONDARY, params.secondary_tx_seconds(k))
                     for k in range(params.num_instants + 1)])


def access_breakdown(policy: AccessPolicy, profile: SensingProfile) -> AccessBreakdown:
    _check_lengths(policy, profile)
    p_fa, p_md = profile.arrays()
    omega, beta = np.array(policy.omega), np.array(policy.beta)
    rows = {}
    # idle channel: sensed busy is a false alarm; busy channel: sensed idle is a miss
    for state, looks_busy in (("idle", p_fa), ("busy", 1.0 - p_md)):
        access = (1.0 - looks_busy) * omega + looks_busy * beta
        reach = np.concatenate(([1.0], np.cumprod(1.0 - access)[:-1]))
        rows[state] = np.concatenate(([policy.omega_0], (1.0 - policy.omega_0) * reach * access))
    return AccessBreakdown(rows["idle"], rows["busy"])


def primary_service_rate(policy: AccessPolicy, profile: SensingProfile, params: SystemParams) -> float:
    """Mean primary departures per backlogged slot: no SU transmission and no outage."""
    _check_lengths(policy, profile, params)
    p_md = np.array(profile.p_md)
    stay = p_md * (1.0 - np.array(policy.omega)) + (1.0 - p_md) * (1.0 - np.array(policy.beta))
    p_ok = success_probability(params, Link.PRIMARY, params.slot_seconds)
    return float(p_ok * (1.0 - policy.omega_0) * np.prod(stay))


def is_stable(lambda_p: float, mu_p: float) -> bool:
    return lambda_p < mu_p


def _check_arrival(lambda_p: float):
    if not 0.0 <= lambda_p <= 1.0:
        raise ValueError(f"lambda_p must lie in [0, 1], got {lambda_p}")


def primary_empty_probability(lambda_p: float, mu_p: float) -> float:
    _check_arrival(lambda_p)
    if not is_stable(lambda_p, mu_p):
        raise UnstableQueueError(f"lambda_p={lambda_p} >= mu_p={mu_p}")
    return 1.0 - lambda_p / mu_p


def primary_delay(lambda_p: float, mu_p: float) -> float:
    """Mean primary sojourn in slots, counting the slot of successful service."""
    _check_arrival(lambda_p)
    if not is_stable(lambda_p, mu_p):
        raise UnstableQueueError(f"lambda_p={lambda_p} >= mu_p={mu_p}")
    return (1.0 - lambda_p) / (mu_p - lambda_p)


def _idle_slot_throughput(policy: AccessPolicy, profile: SensingProfile, params: SystemParams) -> float:
    """Secondary successes per slot given the primary queue is empty."""
    reach = access_breakdown(policy, profile).idle
    return float(reach @ secondary_success_table(params))


def secondary_throughput(policy: AccessPolicy, profile: SensingProfile, params: SystemParams,
                         lambda_p: float) -> float:
    mu_p = primary_service_rate(policy, profile, params)
    return primary_empty_probability(lambda_p, mu_p) * _idle_slot_throughput(policy, profile, params)


def evaluate(policy: AccessPolicy, profile: SensingProfile, params: SystemParams,
             lambda_p: float) -> AnalyticMetrics:
    """All closed-form metrics at once; queue metrics are ``None`` when unstable."""
    _check_arrival(lambda_p)
    mu_p = primary_service_rate(policy, profile, params)
    breakdown = access_breakdown(policy, profile)
    if not is_stable(lambda_p, mu_p):
        return AnalyticMetrics(mu_p=mu_p, mu_s=0.0, stable=False, breakdown=breakdown)
    p_empty = primary_empty_probability(lambda_p, mu_p)
    mu_s = p_empty * float(breakdown.idle @ secondary_success_table(params))
    return AnalyticMetrics(mu_p=mu_p, mu_s=mu_s, stable=True, delay_p=primary_delay(lambda_p, mu_p),
                           p_empty=p_empty, breakdown=breakdown)


def perfect_bound(lambda_p: float, params: SystemParams, delay_cap: float) -> float | None:
    """Throughput when the SU knows idleness for free; ``None`` if the cap cannot be met."""
    if delay_cap <= 1:
        raise ValueError(f"delay_cap must exceed 1 slot, got {delay_cap}")
    _check_arrival(lambda_p)
    p_ok = success_probability(params, Link.PRIMARY, params.slot_seconds)
    if lambda_p > (p_ok * delay_cap - 1.0) / (delay_cap - 1.0):
        return None
    return (1.0 - lambda_p / p_ok) * success_probability(params, Link.SECONDARY, params.slot_seconds)


def max_feasible_arrival(params: SystemParams, profile: SensingProfile | None, delay_cap: float) -> float:
    """Largest arrival rate the silent SU policy can carry within ``delay_cap``.

    ``profile`` does not enter: the silent policy never interferes.
    """
    p_ok = success_probability(params, Link.PRIMARY, params.slot_seconds)
    if np.isinf(delay_cap):
        return p_ok
    if delay_cap <= 1:
        raise ValueError(f"delay_cap must exceed 1 slot, got {delay_cap}")
    return float(np.clip((p_ok * delay_cap - 1.0) / (delay_cap - 1.0), 0.0, 1.0))


def required_service_rate(lambda_p: float, delay_cap: float) -> float:
    """Smallest ``mu_p`` meeting both stability and ``delay <= delay_cap``."""
    return lambda_p + (1.0 - lambda_p) / delay_cap


class ObjectiveModel:
    """Vectorised ``mu_p`` and idle-slot throughput with gradients.

    Works on the flat vector ``[omega_0, omega_1..M, beta_1..M]``; used by the
    optimizer, where the dataclass path is too slow.
    """

    def __init__(self, profile: SensingProfile, params: SystemParams):
        _check_lengths(AccessPolicy.zeros(profile.m), profile, params)
        self.m = profile.m
        self.p_fa, self.p_md = profile.arrays()
        self.p_ok_primary = success_probability(params, Link.PRIMARY, params.slot_seconds)
        self.p_ok_secondary = secondary_success_table(params)

    def mu_p(self, x: np.ndarray) -> float:
        m = self.m
        stay = self.p_md * (1.0 - x[1:m + 1]) + (1.0 - self.p_md) * (1.0 - x[m + 1:])
        return float(self.p_ok_primary * (1.0 - x[0]) * np.prod(stay))

    def mu_p_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        m = self.m
        stay = self.p_md * (1.0 - x[1:m + 1]) + (1.0 - self.p_md) * (1.0 - x[m + 1:])
        prefix = np.concatenate(([1.0], np.cumprod(stay)[:-1]))
        suffix = np.concatenate((np.cumprod(stay[::-1])[::-1][1:], [1.0]))
        others = prefix * suffix
        scale = self.p_ok_primary * (1.0 - x[0])
        grad = np.empty_like(x)
        grad[0] = -self.p_ok_primary * prefix[-1] * stay[-1]
        grad[1:m + 1] = -scale * others * self.p_md
        grad[m + 1:] = -scale * others * (1.0 - self.p_md)
        return float(scale * prefix[-1] * stay[-1]), grad

    def idle_throughput_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        m = self.m
        ps = self.p_ok_secondary
        access = (1.0 - self.p_fa) * x[1:m + 1] + self.p_fa * x[m + 1:]
        reach = np.concatenate(([1.0], np.cumprod(1.0 - access)[:-1]))
        # value[k] = expected successes from instant k+1 onward given the cascade got there
        value = np.zeros(m + 1)
        for k in range(m - 1, -1, -1):
            value[k] = access[k] * ps[k + 1] + (1.0 - access[k]) * value[k + 1]
        total = x[0] * ps[0] + (1.0 - x[0]) * value[0]
        d_access = (1.0 - x[0]) * reach * (ps[1:] - value[1:])
        grad = np.empty_like(x)
        grad[0] = ps[0] - value[0]
        grad[1:m + 1] = d_access * (1.0 - self.p_fa)
        grad[m + 1:] = d_access * self.p_fa
        return float(total), grad

    def mu_s_grad(self, x: np.ndarray, lambda_p: float, mu_floor: float = 1e-300):
        mu_p, g_mu = self.mu_p_grad(x)
        idle, g_idle = self.idle_throughput_grad(x)
        mu_p = max(mu_p, mu_floor)
        factor = 1.0 - lambda_p / mu_p
        return factor * idle, factor * g_idle + (lambda_p / mu_p**2) * idle * g_mu
