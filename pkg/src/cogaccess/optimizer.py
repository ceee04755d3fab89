"""Throughput maximisation over access probabilities.

Maximise ``mu_s`` subject to ``lambda_p < mu_p`` and ``delay_p <= D``. Both
constraints collapse to ``mu_p >= lambda_p + (1 - lambda_p) / D``, and
``mu_p`` is non-increasing in every access probability, so the feasible set
is closed under shrinking any coordinate toward zero. The optimizer uses that
to pull any point back into the feasible set without penalty terms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import analytic
from .analytic import AccessPolicy, AnalyticMetrics, ObjectiveModel
from .channel import Link, SystemParams, success_probability
from .sensing import SensingProfile


class ProtocolVariant(enum.Enum):
    PROPOSED = "proposed"
    SP_HAT_NO_BUSY_ACCESS = "sp_hat"
    S1 = "s1"
    S2 = "s2"
    S3 = "s3"
    S4 = "s4"
    PERFECT_BOUND = "perfect"

    @classmethod
    def parse(cls, name: str) -> "ProtocolVariant":
        key = name.strip().lower()
        for v in cls:
            if key in (v.value, v.name.lower()):
                return v
        raise ValueError(f"unknown protocol variant {name!r}; expected one of {[v.value for v in cls]}")


@dataclass(frozen=True)
class VariantConstraints:
    """Which entries of ``[omega_0, omega_1..M, beta_1..M]`` a variant may tune."""

    free_mask: np.ndarray
    fixed_values: np.ndarray
    active_instants: frozenset

    @property
    def n_free(self) -> int:
        return int(self.free_mask.sum())

    @property
    def free_index(self) -> np.ndarray:
        return np.flatnonzero(self.free_mask)

    def embed(self, z) -> np.ndarray:
        x = self.fixed_values.copy()
        x[self.free_mask] = z
        return x


@dataclass(frozen=True)
class OptimizerSettings:
    multistarts: int = 64
    grid_points_per_dim: int = 101
    tolerance: float = 1e-9
    max_iterations: int = 200
    seed: int = 0

    def __post_init__(self):
        for name in ("multistarts", "grid_points_per_dim", "max_iterations"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class OptimizationResult:
    variant: ProtocolVariant
    policy: AccessPolicy
    mu_s: float
    feasible: bool
    metrics: AnalyticMetrics = field(compare=False)


def variant_constraints(variant: ProtocolVariant, m: int) -> VariantConstraints:
    if m < 1:
        raise ValueError("m must be >= 1")
    n = 2 * m + 1
    free = np.zeros(n, dtype=bool)
    fixed = np.zeros(n)
    omega = lambda k: k  # noqa: E731  index of omega_k, k >= 1
    beta = lambda k: m + k  # noqa: E731
    if variant is ProtocolVariant.PROPOSED:
        free[:] = True
        active = range(m + 1)
    elif variant is ProtocolVariant.SP_HAT_NO_BUSY_ACCESS:
        free[:m + 1] = True
        active = range(m + 1)
    elif variant is ProtocolVariant.S1:
        free[[omega(1), beta(1)]] = True
        active = (1,)
    elif variant is ProtocolVariant.S2:
        fixed[omega(1)] = 1.0
        free[beta(1)] = True
        active = (1,)
    elif variant is ProtocolVariant.S3:
        fixed[omega(1)] = 1.0
        active = (1,)
    elif variant is ProtocolVariant.S4:
        free[0] = True
        active = (0,)
    else:
        active = ()
    return VariantConstraints(free, fixed, frozenset(active))


def is_feasible(policy: AccessPolicy, lambda_p: float, profile: SensingProfile, params: SystemParams,
                delay_cap: float) -> bool:
    if not all(0.0 <= v <= 1.0 for v in policy.as_vector()):
        return False
    mu_p = analytic.primary_service_rate(policy, profile, params)
    if not analytic.is_stable(lambda_p, mu_p):
        return False
    return analytic.primary_delay(lambda_p, mu_p) <= delay_cap


def _result(variant, policy, profile, params, lambda_p, feasible) -> OptimizationResult:
    metrics = analytic.evaluate(policy, profile, params, lambda_p)
    return OptimizationResult(variant, policy, metrics.mu_s if feasible else 0.0, feasible, metrics)


def _infeasible(variant, m, profile, params, lambda_p) -> OptimizationResult:
    return _result(variant, AccessPolicy.zeros(m), profile, params, lambda_p, False)


def _perfect(lambda_p, profile, params, delay_cap) -> OptimizationResult:
    m = profile.m
    bound = analytic.perfect_bound(lambda_p, params, delay_cap)
    mu_p = success_probability(params, Link.PRIMARY, params.slot_seconds)
    stable = analytic.is_stable(lambda_p, mu_p)
    metrics = AnalyticMetrics(
        mu_p=mu_p,
        mu_s=bound or 0.0,
        stable=stable,
        delay_p=analytic.primary_delay(lambda_p, mu_p) if stable else None,
        p_empty=analytic.primary_empty_probability(lambda_p, mu_p) if stable else None,
    )
    return OptimizationResult(ProtocolVariant.PERFECT_BOUND, AccessPolicy.zeros(m), bound or 0.0,
                              bound is not None, metrics)


class _Problem:
    """One instance of the program restricted to a variant's free coordinates."""

    def __init__(self, variant, lambda_p, profile, params, delay_cap):
        self.model = ObjectiveModel(profile, params)
        self.cons = variant_constraints(variant, profile.m)
        self.lambda_p = lambda_p
        self.delay_cap = delay_cap
        self.mu_required = analytic.required_service_rate(lambda_p, delay_cap)

    def feasible(self, x: np.ndarray) -> bool:
        # same arithmetic as is_feasible, on the flat vector
        mu_p = self.model.mu_p(x)
        return mu_p > self.lambda_p and (1.0 - self.lambda_p) / (mu_p - self.lambda_p) <= self.delay_cap

    def mu_s(self, x: np.ndarray) -> float:
        mu_p = self.model.mu_p(x)
        idle, _ = self.model.idle_throughput_grad(x)
        return (1.0 - self.lambda_p / mu_p) * idle

    def pull_back(self, z: np.ndarray, iters: int = 60) -> np.ndarray:
        """Largest feasible point on the segment from the all-free-zero corner to ``z``."""
        z = np.clip(z, 0.0, 1.0)
        if self.feasible(self.cons.embed(z)):
            return z
        lo, hi = 0.0, 1.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if self.feasible(self.cons.embed(mid * z)):
                lo = mid
            else:
                hi = mid
        return lo * z

    def axis_seeds(self) -> list[np.ndarray]:
        seeds = []
        for i in range(self.cons.n_free):
            e = np.zeros(self.cons.n_free)
            e[i] = 1.0
            seeds.append(self.pull_back(e))
        return seeds

    def local_search(self, z0: np.ndarray, settings: OptimizerSettings) -> np.ndarray:
        cons, model, lam = self.cons, self.model, self.lambda_p
        mu_floor = 0.5 * self.mu_required
        free = cons.free_mask

        def objective(z):
            value, grad = model.mu_s_grad(cons.embed(z), lam, mu_floor)
            return -value, -grad[free]

        def margin(z):
            return model.mu_p(cons.embed(z)) - self.mu_required

        def margin_jac(z):
            return model.mu_p_grad(cons.embed(z))[1][free]

        res = minimize(
            objective, z0, jac=True, method="SLSQP",
            bounds=[(0.0, 1.0)] * cons.n_free,
            constraints=[{"type": "ineq", "fun": margin, "jac": margin_jac}],
            # SLSQP's ftol is a stopping test, not an accuracy guarantee; run it tighter
            options={"maxiter": settings.max_iterations, "ftol": settings.tolerance * 1e-3},
        )
        return self.pull_back(np.asarray(res.x, dtype=float))

    def polish(self, z: np.ndarray, settings: OptimizerSettings, rounds: int = 20) -> np.ndarray:
        """Restart the local search from its own output until it stops improving."""
        value = self.mu_s(self.cons.embed(z))
        for _ in range(rounds):
            z_new = self.local_search(z, settings)
            new = self.mu_s(self.cons.embed(z_new))
            if new <= value + settings.tolerance:
                if new > value:
                    z, value = z_new, new
                break
            z, value = z_new, new
        return z


_POLISHED = 4


def _pick(candidates, tolerance):
    """Best ``mu_s``; ties within ``tolerance`` go to the larger ``mu_p``, then first found."""
    best = max(c[0] for c in candidates)
    close = [c for c in candidates if c[0] >= best - tolerance]
    return max(close, key=lambda c: c[1])  # max keeps the first of equal keys


def optimize(variant: ProtocolVariant, lambda_p: float, profile: SensingProfile, params: SystemParams,
             delay_cap: float, settings: OptimizerSettings | None = None) -> OptimizationResult:
    """Best feasible policy for ``variant`` found by multistart local search.

    Starts are the variant's minimal policy, one point per free coordinate
    pushed to the feasibility boundary, and ``settings.multistarts`` random
    points pulled back into the feasible set. Each random start draws from its
    own stream seeded by ``(settings.seed, start index)``.
    """
    settings = settings or OptimizerSettings()
    analytic._check_arrival(lambda_p)
    if variant is ProtocolVariant.PERFECT_BOUND:
        return _perfect(lambda_p, profile, params, delay_cap)
    prob = _Problem(variant, lambda_p, profile, params, delay_cap)
    cons = prob.cons
    if not prob.feasible(cons.embed(np.zeros(cons.n_free))):
        return _infeasible(variant, profile.m, profile, params, lambda_p)

    starts = [np.zeros(cons.n_free)]
    if cons.n_free:
        starts += prob.axis_seeds()
        for i in range(settings.multistarts):
            rng = np.random.default_rng([settings.seed, i])
            starts.append(prob.pull_back(rng.random(cons.n_free)))

    candidates = []
    for z0 in starts:
        points = [z0]
        if cons.n_free:
            points.append(prob.local_search(z0, settings))
        for z in points:
            candidates.append((prob.mu_s(cons.embed(z)), z))
    if cons.n_free:
        ranked = sorted(range(len(candidates)), key=lambda i: -candidates[i][0])
        for i in ranked[:_POLISHED]:
            z = prob.polish(candidates[i][1], settings)
            candidates.append((prob.mu_s(cons.embed(z)), z))
    scored = []
    for value, z in candidates:
        x = cons.embed(z)
        scored.append((value, prob.model.mu_p(x), x))
    _, _, x = _pick(scored, settings.tolerance)
    policy = AccessPolicy.from_vector(x)
    if not is_feasible(policy, lambda_p, profile, params, delay_cap):
        raise RuntimeError("optimizer produced a policy that fails the feasibility check")
    return _result(variant, policy, profile, params, lambda_p, True)


# --- exhaustive grid oracle -------------------------------------------------

MAX_ORACLE_FREE = 5
_ORACLE_BLOCK = 1 << 20


def _batch_metrics(x: np.ndarray, profile: SensingProfile, params: SystemParams):
    """``(mu_p, idle-slot throughput, P(silent all slot | idle))`` per row of ``x``, by direct expansion."""
    m = profile.m
    p_ok = success_probability(params, Link.PRIMARY, params.slot_seconds)
    ps = [success_probability(params, Link.SECONDARY, params.secondary_tx_seconds(k)) for k in range(m + 1)]
    mu_p = p_ok * (1.0 - x[:, 0])
    silent = 1.0 - x[:, 0]
    idle = x[:, 0] * ps[0]
    for k in range(1, m + 1):
        fa, md = profile.p_fa[k - 1], profile.p_md[k - 1]
        w, b = x[:, k], x[:, m + k]
        mu_p = mu_p * (md * (1.0 - w) + (1.0 - md) * (1.0 - b))
        go = (1.0 - fa) * w + fa * b
        idle = idle + silent * go * ps[k]
        silent = silent * (1.0 - go)
    return mu_p, idle, silent


def _dominance_front(points: np.ndarray) -> np.ndarray:
    """Rows of ``points`` (columns: keep, gain) not dominated in both columns."""
    order = np.lexsort((-points[:, 1], -points[:, 0]))
    keep, best_gain = [], -np.inf
    for i in order:
        if points[i, 1] > best_gain:
            keep.append(i)
            best_gain = points[i, 1]
    return np.array(keep)


def _pair_on_boundary(stay_needed: np.ndarray, fa: float, md: float) -> tuple[np.ndarray, np.ndarray]:
    """Cheapest-first ``(omega, beta)`` meeting ``stay_busy == stay_needed``, i.e. the continuous front."""
    budget = np.clip(1.0 - stay_needed, 0.0, 1.0)
    if (1.0 - fa) / md >= fa / (1.0 - md):
        w = np.minimum(budget / md, 1.0)
        b = np.clip((budget - md * w) / (1.0 - md), 0.0, 1.0)
    else:
        b = np.minimum(budget / (1.0 - md), 1.0)
        w = np.clip((budget - (1.0 - md) * b) / md, 0.0, 1.0)
    return w, b


def grid_oracle(variant: ProtocolVariant, lambda_p: float, profile: SensingProfile, params: SystemParams,
                delay_cap: float, grid_points_per_dim: int = 101, snap: bool = True) -> OptimizationResult:
    """Best feasible point of the uniform grid over the variant's free coordinates.

    When the last instant carrying free coordinates has both ``omega`` and
    ``beta`` free and nothing can be transmitted after it, only grid pairs not
    dominated in (primary non-interference, idle access) are enumerated for
    it. Any grid point using a dominated pair is matched or beaten by one using
    a front pair, so the grid maximum is unchanged.

    With ``snap`` every grid point is also moved along each free coordinate,
    one at a time, onto the delay/stability boundary (``mu_p`` is affine in
    each coordinate, so the crossing is exact), and that pair is also placed
    on the continuous front at the boundary. A plain grid misses an optimum on
    the boundary by O(h); these extra points bring that down to O(h^2).
    """
    if variant is ProtocolVariant.PERFECT_BOUND:
        return _perfect(lambda_p, profile, params, delay_cap)
    m = profile.m
    cons = variant_constraints(variant, m)
    if cons.n_free > MAX_ORACLE_FREE:
        raise ValueError(f"grid oracle limited to {MAX_ORACLE_FREE} free parameters, variant has {cons.n_free}")
    grid = np.linspace(0.0, 1.0, grid_points_per_dim)
    free = list(cons.free_index)
    needed = lambda_p + (1.0 - lambda_p) / delay_cap

    pair_cols = None
    instants = sorted({i if i <= m else i - m for i in free if i > 0})
    if instants:
        k = instants[-1]
        later_silent = all(cons.fixed_values[j] == 0 and cons.fixed_values[m + j] == 0 for j in range(k + 1, m + 1))
        if k in free and m + k in free and later_silent:
            pair_cols = (k, m + k)

    if pair_cols:
        k = pair_cols[0]
        fa, md = profile.p_fa[k - 1], profile.p_md[k - 1]
        w, b = (a.ravel() for a in np.meshgrid(grid, grid, indexing="ij"))
        stay_busy = md * (1.0 - w) + (1.0 - md) * (1.0 - b)
        go_idle = (1.0 - fa) * w + fa * b
        front = _dominance_front(np.column_stack((stay_busy, go_idle)))
        pairs = np.column_stack((w[front], b[front]))
        outer = [i for i in free if i not in pair_cols]
        ps_k = success_probability(params, Link.SECONDARY, params.secondary_tx_seconds(k))
    else:
        pairs = np.empty((1, 0))
        outer = free

    def pair_terms(pair):
        if not pair_cols:
            return 1.0, 0.0
        w, b = pair
        return md * (1.0 - w) + (1.0 - md) * (1.0 - b), ((1.0 - fa) * w + fa * b) * ps_k

    best = None  # (mu_s, mu_p, row)

    def consider(mu_p, idle, row_of):
        nonlocal best
        with np.errstate(divide="ignore", invalid="ignore"):
            ok = (mu_p > lambda_p) & ((1.0 - lambda_p) / (mu_p - lambda_p) <= delay_cap)
            mu_s = np.where(ok, (1.0 - lambda_p / mu_p) * idle, -np.inf)
        top = mu_s.max()
        if not np.isfinite(top):
            return
        # among near-ties prefer larger mu_p, matching optimize()
        cand = np.flatnonzero(mu_s >= top - 1e-12)
        j = cand[np.argmax(mu_p[cand])]
        if best is None or mu_s[j] > best[0] + 1e-12 or (mu_s[j] >= best[0] - 1e-12 and mu_p[j] > best[1]):
            best = (float(mu_s[j]), float(mu_p[j]), row_of(j))

    shape = (len(grid),) * len(outer)
    n_outer = int(np.prod(shape))
    for start in range(0, n_outer, _ORACLE_BLOCK):
        flat = np.arange(start, min(start + _ORACLE_BLOCK, n_outer))
        x = np.tile(cons.fixed_values, (len(flat), 1))
        if outer:
            for col, idx in zip(outer, np.unravel_index(flat, shape)):
                x[:, col] = grid[idx]
        # with the pair at (0, 0) it neither blocks the PU nor serves the SU
        mu_p0, idle0, silent0 = _batch_metrics(x, profile, params)

        def row_at(j, pair, col=None, value=None):
            row = x[j].copy()
            if pair_cols:
                row[list(pair_cols)] = pair
            if col is not None:
                row[col] = value[j]
            return row

        for pair in pairs:
            stay, gain = pair_terms(pair)
            consider(mu_p0 * stay, idle0 + silent0 * gain, lambda j, pair=pair: row_at(j, pair))
        if not snap:
            continue

        if pair_cols:
            with np.errstate(divide="ignore", invalid="ignore"):
                w_b, b_b = _pair_on_boundary(needed / mu_p0, fa, md)
            w_b, b_b = np.nan_to_num(w_b), np.nan_to_num(b_b)
            stay = md * (1.0 - w_b) + (1.0 - md) * (1.0 - b_b)
            gain = ((1.0 - fa) * w_b + fa * b_b) * ps_k
            consider(mu_p0 * stay, idle0 + silent0 * gain,
                     lambda j: row_at(j, (w_b[j], b_b[j])))

        for col in outer:
            lo, hi = x.copy(), x.copy()
            lo[:, col], hi[:, col] = 0.0, 1.0
            a0, i0, s0 = _batch_metrics(lo, profile, params)
            a1, i1, s1 = _batch_metrics(hi, profile, params)
            for pair in pairs:
                stay, gain = pair_terms(pair)
                with np.errstate(divide="ignore", invalid="ignore"):
                    t = (a0 * stay - needed) / ((a0 - a1) * stay)
                # stay a hair inside so rounding cannot tip the point out
                t = np.clip(np.nan_to_num(t, nan=0.0, posinf=1.0, neginf=0.0) * (1.0 - 1e-12), 0.0, 1.0)
                mu_p = (a0 + (a1 - a0) * t) * stay
                idle = i0 + (i1 - i0) * t + (s0 + (s1 - s0) * t) * gain
                consider(mu_p, idle, lambda j, pair=pair, col=col, t=t: row_at(j, pair, col, t))

    if best is None:
        return _infeasible(variant, m, profile, params, lambda_p)
    policy = AccessPolicy.from_vector(best[2])
    return _result(variant, policy, profile, params, lambda_p, True)
