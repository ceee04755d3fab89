"""Slot-level Monte Carlo of one primary queue and one saturated secondary user.

Each slot: the PU transmits iff its queue is non-empty; the SU runs its
access cascade, sensing independently at each instant given the true PU
state; overlapping transmissions collide; a lone transmission succeeds when
its fading draw supports the required rate; the PU's head-of-line packet
leaves on success; then at most one new packet arrives (late arrival).

Slots are processed in chunks. Within a chunk every random draw is made up
front for both possible PU states, so the only sequential dependence left is
the queue recursion ``Q[t+1] = max(Q[t] - S[t], 0) + X[t]`` where ``S[t]`` is
"a backlogged PU would have been served". That is a reflected random walk and
is solved with a cumulative minimum.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import analytic
from .analytic import AccessPolicy
from .channel import Link, SystemParams, draw_success
from .sensing import SensingProfile

CONFIDENCE = 0.99
N_BATCHES = 100
CHUNK_SLOTS = 1 << 16
Z_LIMIT = 3.0

TRACE_COLUMNS = ("slot", "queue", "arrival", "pu_tx", "su_instant", "sensed", "collision",
                 "pu_success", "su_success")


@dataclass(frozen=True)
class SimConfig:
    n_slots: int
    warmup_slots: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.warmup_slots is None:
            object.__setattr__(self, "warmup_slots", self.n_slots // 20)
        if not (int(self.n_slots) > int(self.warmup_slots) >= 0):
            raise ValueError(f"need n_slots > warmup_slots >= 0, got {self.n_slots}, {self.warmup_slots}")


@dataclass
class QueueState:
    """Primary queue carried across chunks: FIFO arrival slot of every packet held."""

    arrival_slot_tags: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def length(self) -> int:
        return len(self.arrival_slot_tags)


@dataclass(frozen=True)
class SimMetrics:
    mu_p_hat: float
    mu_s_hat: float
    delay_hat: float
    p_empty_hat: float
    ci_halfwidth: dict
    n_measured: int
    n_busy: int
    n_delays: int
    primary_successes: int
    secondary_successes: int
    final_queue: int
    total_arrivals: int
    total_departures: int
    access_idle_hat: np.ndarray = field(repr=False)
    access_busy_hat: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class Comparison:
    quantity: str
    analytic: float
    empirical: float
    halfwidth: float
    z: float

    @property
    def flagged(self) -> bool:
        return abs(self.z) > Z_LIMIT


def _cascade(rng, policy: AccessPolicy, profile: SensingProfile, n: int):
    """Access instant (-1 = silent) under an idle and a busy PU, from shared draws.

    Also returns the per-instant sensed-busy flags for each branch so a trace
    can show what the SU saw.
    """
    m = policy.m
    start = rng.random(n) < policy.omega_0
    inst = {s: np.where(start, 0, -1) for s in ("idle", "busy")}
    sensed = {s: np.zeros((n, m), dtype=bool) for s in ("idle", "busy")}
    for k in range(1, m + 1):
        u_sense = rng.random(n)
        u_access = rng.random(n)
        fa, md = profile.p_fa[k - 1], profile.p_md[k - 1]
        # idle PU: false alarm with p_fa; busy PU: correctly flagged with 1 - p_md
        for state, looks_busy in (("idle", u_sense < fa), ("busy", u_sense >= md)):
            undecided = inst[state] < 0
            sensed[state][:, k - 1] = looks_busy & undecided
            p_go = np.where(looks_busy, policy.beta[k - 1], policy.omega[k - 1])
            inst[state] = np.where(undecided & (u_access < p_go), k, inst[state])
    return inst["idle"], inst["busy"], sensed


def _reflected_walk(q0: int, served: np.ndarray, arrived: np.ndarray) -> np.ndarray:
    """Queue length at the start of each slot of the chunk, and after its last slot."""
    step = np.empty(len(served), dtype=np.int64)
    step[0] = q0 - served[0]
    step[1:] = arrived[:-1].astype(np.int64) - served[1:]
    walk = np.cumsum(step)
    after_service = walk - np.minimum(np.minimum.accumulate(walk), 0)
    queue = np.empty(len(served) + 1, dtype=np.int64)
    queue[0] = q0
    queue[1:] = after_service + arrived
    return queue


def _batch_ci(values: np.ndarray, n_batches: int = N_BATCHES) -> float:
    """Half-width of the confidence interval for the mean, by non-overlapping batch means."""
    n = len(values) // n_batches
    if n == 0:
        return math.nan
    means = values[: n * n_batches].reshape(n_batches, n).mean(axis=1)
    t = stats.t.ppf(0.5 + CONFIDENCE / 2, n_batches - 1)
    return float(t * means.std(ddof=1) / math.sqrt(n_batches))


def simulate(params: SystemParams, profile: SensingProfile, policy: AccessPolicy, lambda_p: float,
             sim: SimConfig, trace_path=None) -> SimMetrics:
    """Run ``sim.n_slots`` slots and return estimates over the post-warmup window.

    ``mu_p_hat`` is primary successes per backlogged slot; ``delay_hat`` averages
    the sojourn of packets that arrived after warmup and departed before the end.
    """
    if policy.m != profile.m or profile.m != params.num_instants:
        raise ValueError("policy, profile and params disagree on the number of instants")
    analytic._check_arrival(lambda_p)
    rng = np.random.default_rng(sim.seed)
    m = policy.m
    tx_by_instant = np.array([params.secondary_tx_seconds(k) for k in range(m + 1)])
    queue = QueueState()
    warm = sim.warmup_slots
    total_arrivals = total_departures = 0

    busy_parts, su_ok_parts, pu_ok_parts, delay_parts = [], [], [], []
    access_idle = np.zeros(m + 2, dtype=np.int64)
    access_busy = np.zeros(m + 2, dtype=np.int64)
    writer = None
    trace_file = open(trace_path, "w", newline="") if trace_path else None
    try:
        if trace_file:
            writer = csv.writer(trace_file)
            writer.writerow(TRACE_COLUMNS)
        for first in range(0, sim.n_slots, CHUNK_SLOTS):
            n = min(CHUNK_SLOTS, sim.n_slots - first)
            slots = np.arange(first, first + n)
            arrived = rng.random(n) < lambda_p
            inst_idle, inst_busy, sensed = _cascade(rng, policy, profile, n)
            pu_fading_ok = draw_success(rng, params, Link.PRIMARY, params.slot_seconds, size=n)
            served = (inst_busy < 0) & pu_fading_ok

            q = _reflected_walk(queue.length, served, arrived)
            busy = q[:-1] > 0
            su_inst = np.where(busy, inst_busy, inst_idle)
            su_tx = su_inst >= 0
            su_fading_ok = draw_success(rng, params, Link.SECONDARY, tx_by_instant[np.maximum(su_inst, 0)])
            pu_ok = busy & served
            su_ok = ~busy & su_tx & su_fading_ok

            # FIFO: the i-th departure ever is the i-th arrival ever
            departures = slots[pu_ok]
            total_arrivals += int(arrived.sum())
            total_departures += len(departures)
            pending = np.concatenate((queue.arrival_slot_tags, slots[arrived]))
            arrivals_served = pending[: len(departures)]
            queue.arrival_slot_tags = pending[len(departures):]
            assert queue.length == q[-1]
            tagged = arrivals_served >= warm
            delay_parts.append(departures[tagged] - arrivals_served[tagged])

            measured = slots >= warm
            busy_parts.append(busy[measured])
            su_ok_parts.append(su_ok[measured])
            pu_ok_parts.append(pu_ok[measured])
            access_idle += np.bincount(su_inst[measured & ~busy] + 1, minlength=m + 2)
            access_busy += np.bincount(su_inst[measured & busy] + 1, minlength=m + 2)

            if writer:
                for i in range(n):
                    k = int(su_inst[i])
                    state = "busy" if busy[i] else "idle"
                    seen = "".join("B" if s else "I" for s in sensed[state][i, : (k if k > 0 else m)]
                                   ) if k != 0 else ""
                    writer.writerow((int(slots[i]), int(q[i]), int(arrived[i]), int(busy[i]),
                                     k if k >= 0 else "", seen, int(busy[i] and su_tx[i]),
                                     int(pu_ok[i]), int(su_ok[i])))
    finally:
        if trace_file:
            trace_file.close()

    busy = np.concatenate(busy_parts)
    su_ok = np.concatenate(su_ok_parts)
    pu_ok = np.concatenate(pu_ok_parts)
    delays = np.concatenate(delay_parts)
    n_busy = int(busy.sum())
    n_pu_ok = int(pu_ok.sum())
    z = stats.norm.ppf(0.5 + CONFIDENCE / 2)
    mu_p_hat = n_pu_ok / n_busy if n_busy else math.nan
    ci = {
        "mu_p": z * math.sqrt(mu_p_hat * (1 - mu_p_hat) / n_busy) if n_busy else math.nan,
        "mu_s": _batch_ci(su_ok.astype(float)),
        "p_empty": _batch_ci((~busy).astype(float)),
        "delay": _batch_ci(delays.astype(float)) if len(delays) else math.nan,
    }
    n_idle = len(busy) - n_busy
    return SimMetrics(
        mu_p_hat=mu_p_hat,
        mu_s_hat=float(su_ok.mean()),
        delay_hat=float(delays.mean()) if len(delays) else math.nan,
        p_empty_hat=n_idle / len(busy),
        ci_halfwidth=ci,
        n_measured=len(busy),
        n_busy=n_busy,
        n_delays=len(delays),
        primary_successes=n_pu_ok,
        secondary_successes=int(su_ok.sum()),
        final_queue=queue.length,
        total_arrivals=total_arrivals,
        total_departures=total_departures,
        # drop the leading "silent" bin; last entry is instant M
        access_idle_hat=access_idle[1:] / n_idle if n_idle else np.full(m + 1, math.nan),
        access_busy_hat=access_busy[1:] / n_busy if n_busy else np.full(m + 1, math.nan),
    )


def _z(empirical: float, reference: float, halfwidth: float) -> float:
    se = halfwidth / stats.norm.ppf(0.5 + CONFIDENCE / 2)
    if empirical == reference:
        return 0.0
    if not se > 0:
        return math.inf
    return float((empirical - reference) / se)


def validate_against_analytic(params: SystemParams, profile: SensingProfile, policy: AccessPolicy,
                              lambda_p: float, sim: SimConfig) -> list[Comparison]:
    """Simulate once and line up each empirical estimate with its closed form."""
    metrics = analytic.evaluate(policy, profile, params, lambda_p)
    if not metrics.stable:
        raise analytic.UnstableQueueError(
            f"lambda_p={lambda_p} >= mu_p={metrics.mu_p}; closed-form queue metrics are undefined")
    est = simulate(params, profile, policy, lambda_p, sim)
    rows = []
    for name, ref, emp in (("mu_p", metrics.mu_p, est.mu_p_hat), ("mu_s", metrics.mu_s, est.mu_s_hat),
                           ("delay", metrics.delay_p, est.delay_hat), ("p_empty", metrics.p_empty, est.p_empty_hat)):
        hw = est.ci_halfwidth[name]
        if math.isnan(emp):
            # e.g. lambda_p = 0: the queue is never backlogged, nothing to compare
            rows.append(Comparison(name, ref, emp, hw, 0.0))
            continue
        rows.append(Comparison(name, ref, emp, hw, _z(emp, ref, hw)))
    return rows


def read_trace(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))
