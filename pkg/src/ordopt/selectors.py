"""Selection policies and their sample-complexity calculators.

Two families. The sign procedures (two_phase_select, sequential_select)
decide whether a single population has negative mean, spending samples
according to the empirical rate estimate. The comparison procedures
(hoeffding_select, capped_select, successive_elimination) pick one of d
populations: the first two by fixed per-arm budgets (argmin of means, the
cost-minimization convention), elimination by adaptive radii around running
means (argmax, the reward convention the radii were derived in).

Streams: replication-level reproducibility keys every draw by
(seed, stream); a policy derives its internal independent streams as
stream * 2^20 + slot, so callers should keep user-facing stream indices
below 2^44.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._solve import increasing_fixed_point
from .empirical_rate import estimate_rate_at_zero
from .truncation import PowerSpec, solve_x_u

__all__ = [
    "SelectionOutcome", "MomentBound", "RadiusSchedule",
    "two_phase_select", "sequential_select", "hoeffding_select",
    "capping_bias", "capping_radius", "capped_select", "optimal_beta",
    "radius", "successive_elimination", "expected_pulls_bound",
    "solve_log_fixed_point", "PullsBound",
    "concentration_constant", "capped_concentration_constant",
]

_C_NORM = 6.0 / math.pi ** 2
_SUBSTREAM = 1 << 20


@dataclass(frozen=True)
class SelectionOutcome:
    chosen: int
    per_arm_samples: list
    rounds: int
    termination: str  # budget-exhausted | confidence-met | round-cap
    decided_sign: str | None = None  # positive | negative (sign problems)
    false_selection: bool | None = None


@dataclass(frozen=True)
class MomentBound:
    """Known per-population budgets E f(|X_i|) <= c_i."""

    f_spec: object
    c: list

    def __post_init__(self):
        f0 = self.f_spec.f(0.0)
        if not self.c or any(ci <= f0 for ci in self.c):
            raise ValueError("every c_i must exceed f(0)")


@dataclass(frozen=True)
class RadiusSchedule:
    """Elimination radius parameters; kind is 'bounded' or 'heavy'."""

    kind: str
    d: int
    delta: float
    b: float | None = None
    alpha: float | None = None
    K: float | None = None
    c_norm: float = _C_NORM

    def __post_init__(self):
        if self.kind not in ("bounded", "heavy"):
            raise ValueError("kind must be 'bounded' or 'heavy'")
        if self.kind == "bounded" and (self.b is None or self.b <= 0):
            raise ValueError("bounded schedule needs b > 0")
        if self.kind == "heavy" and (
                self.alpha is None or self.alpha <= 1
                or self.K is None or self.K <= 0):
            raise ValueError("heavy schedule needs alpha > 1 and K > 0")
        if self.d < 2 or not 0 < self.delta < 1:
            raise ValueError("need d >= 2 and delta in (0, 1)")
        if abs(self.c_norm - _C_NORM) > 1e-12:
            raise ValueError("c_norm must be 6/pi^2")


def _rng(seed, stream, slot):
    return np.random.Generator(np.random.Philox(
        key=[seed, stream * _SUBSTREAM + slot]))


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")


def _sign_outcome(mean, total, rounds, termination, truth_mean):
    sign = "negative" if mean < 0 else "positive"
    fs = None
    if truth_mean != 0:
        true_sign = "negative" if truth_mean < 0 else "positive"
        fs = sign != true_sign
    return SelectionOutcome(0, [total], rounds, termination, sign, fs)


def two_phase_select(model, delta: float, c1: float, c2: float,
                     seed: int, stream: int = 0) -> SelectionOutcome:
    """Estimate the rate on a pilot batch, then size the decision batch.

    Phase 1 draws m = ceil(c1 log(1/delta)) samples and computes the rate
    estimate at zero; phase 2 draws N = ceil(c2 m / I) fresh samples and
    decides by the sign of their mean. An infinite rate estimate (all pilot
    samples one-signed) collapses N to m.
    """
    _check_delta(delta)
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    m = math.ceil(c1 * math.log(1.0 / delta))
    pilot = model.draw(_rng(seed, stream, 0), m)
    rate = estimate_rate_at_zero(pilot).value
    if math.isinf(rate):
        n2 = m
    else:
        n2 = math.ceil(c2 * m / rate) if rate > 0 else 2 ** 20
        n2 = min(n2, 2 ** 20)  # zero-rate pilot would ask for N = inf
    decision = model.draw(_rng(seed, stream, 1), n2)
    return _sign_outcome(float(np.mean(decision)), m + n2, 2,
                         "budget-exhausted", model.mean())


def sequential_select(model, delta: float, c_schedule, round_cap: int = 50,
                      seed: int = 0, stream: int = 0) -> SelectionOutcome:
    """Grow the sample until the rate estimate certifies the target level.

    Round k holds m_k = ceil((c_1 + ... + c_k) log(1/delta)) cumulative
    samples (the schedule repeats its last entry past the end); the
    procedure stops at the first round with m_k * I_{m_k}(0) >= log(1/delta)
    and decides by the sign of the cumulative mean.
    """
    _check_delta(delta)
    c_schedule = list(c_schedule)
    if not c_schedule or any(c <= 0 for c in c_schedule):
        raise ValueError("c_schedule must be nonempty and positive")
    log_inv = math.log(1.0 / delta)
    values = np.empty(0)
    total_c = 0.0
    for k in range(1, round_cap + 1):
        total_c += c_schedule[min(k - 1, len(c_schedule) - 1)]
        m_k = max(math.ceil(total_c * log_inv), 1)
        if m_k > len(values):
            fresh = model.draw(_rng(seed, stream, k - 1), m_k - len(values))
            values = np.concatenate([values, fresh])
        rate = estimate_rate_at_zero(values).value
        if m_k * rate >= log_inv:
            return _sign_outcome(float(values.mean()), m_k, k,
                                 "confidence-met", model.mean())
    return _sign_outcome(float(values.mean()), len(values), round_cap,
                         "round-cap", model.mean())


def _argmin_outcome(models, means, n, termination):
    arr = np.asarray(means, dtype=float)
    chosen = int(np.argmin(arr))
    true_means = np.array([m.mean() for m in models])
    ties = np.flatnonzero(true_means == true_means.min())
    fs = None if len(ties) > 1 else bool(chosen != ties[0])
    return SelectionOutcome(chosen, [int(n)] * len(models), 1,
                            termination, None, fs)


def hoeffding_select(models, epsilon: float, delta: float, b: float,
                     seed: int, stream: int = 0) -> SelectionOutcome:
    """Fixed-budget minimum selection for populations in [0, b]."""
    d = len(models)
    if d < 2:
        raise ValueError("need at least two populations")
    _check_delta(delta)
    if epsilon <= 0 or b <= 0:
        raise ValueError("epsilon and b must be positive")
    n = math.ceil((2.0 * b * b / epsilon ** 2) * math.log((d - 1) / delta))
    means = [float(np.mean(model.draw(_rng(seed, stream, a), n)))
             for a, model in enumerate(models)]
    return _argmin_outcome(models, means, n, "budget-exhausted")


def capping_bias(f_spec, c: float, u: float) -> float:
    """Two-point capping bias h(u) = (x_u - u)(c - f(0))/(f(x_u) - f(0)).

    An upper bound on the worst capping error at cap u under the budget
    E f(X) <= c; strictly decreasing in u, with the limit
    (c - f(0))/f'(0) at u = 0 (x_u -> 0 for strictly convex f).
    """
    f0 = f_spec.f(0.0)
    if u == 0.0:
        d0 = f_spec.df(0.0)
        return (c - f0) / d0 if d0 > 0 else math.inf
    x_u = solve_x_u(f_spec, u)
    return (x_u - u) * (c - f0) / (f_spec.f(x_u) - f0)


def capping_radius(bounds: MomentBound, x: float) -> float:
    """Smallest cap u with capping bias h(u) <= x, maximized over
    populations. Power budgets solve in closed form; other budgets invert
    the strictly decreasing h by bisection."""
    if x <= 0:
        raise ValueError("x must be positive")
    spec = bounds.f_spec
    radii = []
    for c_i in bounds.c:
        if isinstance(spec, PowerSpec):
            al = spec.alpha
            radii.append((c_i / x) ** (1.0 / (al - 1.0)) * (al - 1.0)
                         / al ** (al / (al - 1.0)))
            continue
        lo = 0.0
        if capping_bias(spec, c_i, lo) <= x:
            radii.append(0.0)
            continue
        hi = 1.0
        while capping_bias(spec, c_i, hi) > x:
            hi *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if capping_bias(spec, c_i, mid) > x:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-13 * max(1.0, hi):
                break
        radii.append(0.5 * (lo + hi))
    return max(radii)


def capped_select(models, epsilon: float, delta: float,
                  bounds: MomentBound, beta: float, seed: int,
                  stream: int = 0) -> SelectionOutcome:
    """Minimum selection for non-negative heavy-tailed populations.

    Caps every draw at u = R(beta epsilon), spends
    n = ceil(2 u^2 / (epsilon^2 (1-beta)^2) log((d-1)/delta)) per
    population, and compares capped means; the cap keeps each mean within
    (1-beta) epsilon of the truth in the worst case, preserving the
    epsilon-gap guarantee.
    """
    d = len(models)
    if d < 2:
        raise ValueError("need at least two populations")
    _check_delta(delta)
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    u = capping_radius(bounds, beta * epsilon)
    n = math.ceil(2.0 * u * u / (epsilon ** 2 * (1.0 - beta) ** 2)
                  * math.log((d - 1) / delta))
    means = [float(np.mean(np.minimum(model.draw(_rng(seed, stream, a), n),
                                      u)))
             for a, model in enumerate(models)]
    return _argmin_outcome(models, means, n, "budget-exhausted")


def optimal_beta(bounds: MomentBound) -> float:
    """The cap fraction minimizing the capped budget: 1/alpha for power
    budgets (maximize beta^{2/(alpha-1)} (1-beta)^2)."""
    if isinstance(bounds.f_spec, PowerSpec):
        return 1.0 / bounds.f_spec.alpha
    raise ValueError("optimal beta has a closed form only for power "
                     "budgets; pick beta manually for other budgets")


def capped_concentration_constant(alpha: float) -> float:
    """p_hat(alpha): the deviation constant for capped means under an
    alpha-th absolute moment bound."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    return ((alpha - 1.0) ** (alpha - 1.0) / alpha ** alpha) * (1.0 + alpha) \
        + math.sqrt(2.0) + 1.0 / 3.0


def concentration_constant(alpha: float) -> float:
    """p(alpha): the truncated-mean analogue of p_hat(alpha)."""
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    return (1.0 + alpha) + math.sqrt(2.0) + 1.0 / 3.0


def radius(schedule: RadiusSchedule, m) -> float:
    """Round-m elimination radius; m may be a scalar or an array."""
    m_arr = np.asarray(m, dtype=float)
    if np.any(m_arr < 1):
        raise ValueError("m must be at least 1")
    d, delta, c = schedule.d, schedule.delta, schedule.c_norm
    if schedule.kind == "bounded":
        out = schedule.b * np.sqrt(
            (2.0 / m_arr) * np.log(d * m_arr ** 2 / (c * delta)))
    else:
        al = schedule.alpha
        out = (capped_concentration_constant(al)
               * schedule.K ** (1.0 / al)
               * (np.log(2.0 * m_arr ** 2 * d / (c * delta)) / m_arr)
               ** ((al - 1.0) / al))
    return float(out) if np.ndim(m) == 0 else out


def _estimator_thresholds(schedule, delta, horizon):
    j = np.arange(1, horizon + 1, dtype=float)
    return (schedule.K * j / math.log(1.0 / delta)) ** (1.0 / schedule.alpha)


def successive_elimination(models, delta: float, schedule: RadiusSchedule,
                           estimator: str = "plain", seed: int = 0,
                           pull_cap: int = 1_000_000, stream: int = 0,
                           on_round=None) -> SelectionOutcome:
    """Round-robin elimination keeping arms within 2 alpha_m of the leader.

    Every surviving arm is pulled once per round; an arm leaves when the
    best running mean exceeds its own by at least twice the radius. The
    running mean is the plain average, or for heavy-tailed schedules a
    truncated (zero out |X_j| > B_j) or capped (clamp to +-B_j) average
    with B_j = (K j / log(1/delta))^(1/alpha) indexed by the pull number.
    Maximization convention: the chosen arm is the surviving leader.
    on_round, when given, is called before each round's eliminations with
    (m, alive mask, running means; nan for dead arms).
    """
    d = len(models)
    if d < 2:
        raise ValueError("need at least two populations")
    _check_delta(delta)
    if pull_cap < 1:
        raise ValueError("pull_cap must be at least 1")
    if estimator not in ("plain", "truncated", "capped"):
        raise ValueError("estimator must be plain, truncated, or capped")
    if estimator != "plain" and schedule.kind != "heavy":
        raise ValueError("truncated and capped estimators need the "
                         "heavy-tail schedule constants")
    if schedule.d != d:
        raise ValueError("schedule.d must match the number of populations")

    rngs = [_rng(seed, stream, a) for a in range(d)]
    block = 256
    buffers = [np.empty(0) for _ in range(d)]

    def transformed(a, upto):
        buf = buffers[a]
        while len(buf) < upto:
            grow = max(block, len(buf))
            fresh = np.asarray(models[a].draw(rngs[a], grow), dtype=float)
            if estimator != "plain":
                lo = len(buf)
                bj = _estimator_thresholds(schedule, delta, lo + grow)[lo:]
                if estimator == "truncated":
                    fresh = np.where(np.abs(fresh) <= bj, fresh, 0.0)
                else:
                    fresh = np.sign(fresh) * np.minimum(np.abs(fresh), bj)
            buf = np.concatenate([buf, fresh])
            buffers[a] = buf
        return buf

    alive = np.ones(d, dtype=bool)
    sums = np.zeros(d)
    pulls = np.zeros(d, dtype=int)
    m = 0
    # rounds are processed in blocks: prefix means over the block locate the
    # first round any elimination triggers, which is exact because each
    # arm's j-th pull is the j-th entry of its own substream regardless of
    # when other arms leave
    while alive.sum() > 1 and m < pull_cap:
        nb = min(512, pull_cap - m)
        idx = np.flatnonzero(alive)
        mat = np.stack([transformed(a, m + nb)[m:m + nb] for a in idx])
        cums = sums[idx, None] + np.cumsum(mat, axis=1)
        ms = np.arange(m + 1, m + nb + 1)
        means = cums / ms
        trig = (means.max(axis=0) - means) >= 2.0 * radius(schedule, ms)
        hit = trig.any(axis=0)
        j = int(np.argmax(hit)) if hit.any() else nb - 1
        if on_round is not None:
            for j2 in range(j + 1):
                full = np.full(d, np.nan)
                full[idx] = means[:, j2]
                on_round(int(ms[j2]), alive.copy(), full)
        m = int(ms[j])
        sums[idx] = cums[:, j]
        pulls[idx] = m
        if hit.any():
            alive[idx[trig[:, j]]] = False

    live_idx = np.flatnonzero(alive)
    chosen = int(live_idx[np.argmax(sums[live_idx] / pulls[live_idx])])
    termination = "confidence-met" if alive.sum() == 1 else "round-cap"
    true_means = np.array([mo.mean() for mo in models])
    ties = np.flatnonzero(true_means == true_means.max())
    fs = None if len(ties) > 1 else bool(chosen != ties[0])
    return SelectionOutcome(chosen, [int(p) for p in pulls], m,
                            termination, None, fs)


def solve_log_fixed_point(a: float, b: float):
    """Solve t = a + b log t for the upper root, with its closed bound.

    Returns (t_star, bound) where bound = a + b log a + (2 b^2 / a)
    log(a + b). Requires a >= e and b >= 1, under which the iteration
    t <- a + b log t is a contraction from t0 = a.
    """
    if a < math.e or b < 1.0:
        raise ValueError("need a >= e and b >= 1")
    t_star, _ = increasing_fixed_point(lambda t: a + b * math.log(t), a)
    bound = a + b * math.log(a) + (2.0 * b * b / a) * math.log(a + b)
    assert t_star <= bound * (1 + 1e-12)
    assert t_star <= (a + b) ** 2
    return t_star, bound


@dataclass(frozen=True)
class PullsBound:
    tau_star: list
    closed_form: list
    dominant_total: float


def _fixed_point_params(schedule, gap):
    d, delta, c = schedule.d, schedule.delta, schedule.c_norm
    if schedule.kind == "bounded":
        lead = 32.0 * schedule.b ** 2 / gap ** 2
        a = lead * math.log(d / (c * delta))
    else:
        al = schedule.alpha
        lead = (4.0 * capped_concentration_constant(al)
                * schedule.K ** (1.0 / al) / gap) ** (al / (al - 1.0))
        a = lead * math.log(2.0 * d / (c * delta))
    return a, 2.0 * lead


def expected_pulls_bound(gaps, schedule: RadiusSchedule) -> PullsBound:
    """Per-gap elimination times tau*_i = inf{m : 4 alpha_m <= gap_i}.

    tau* is found exactly by integer search (small m scanned directly, the
    monotone region bisected); closed_form carries the fixed-point bound
    when its preconditions hold (else the exact tau*), and dominant_total
    is the leading-order total pull count over the suboptimal arms.
    """
    gaps = [float(g) for g in gaps]
    if not gaps or any(g <= 0 for g in gaps):
        raise ValueError("gaps must be positive")

    def ok(m, gap):
        return 4.0 * radius(schedule, m) <= gap

    taus, closed = [], []
    for gap in gaps:
        tau = None
        for m in range(1, 65):
            if ok(m, gap):
                tau = m
                break
        if tau is None:
            lo, hi = 64, 128
            while not ok(hi, gap):
                lo, hi = hi, hi * 2
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if ok(mid, gap):
                    hi = mid
                else:
                    lo = mid
            tau = hi
        taus.append(tau)
        a, b = _fixed_point_params(schedule, gap)
        if a >= math.e and b >= 1.0:
            closed.append(solve_log_fixed_point(a, b)[1])
        else:
            closed.append(float(tau))

    if schedule.kind == "bounded":
        dom = (64.0 * schedule.b ** 2
               * math.log(schedule.d / (schedule.c_norm * schedule.delta))
               * sum(1.0 / g ** 2 for g in gaps))
    else:
        al = schedule.alpha
        dom = (2.0 * (4.0 * capped_concentration_constant(al)
                      * schedule.K ** (1.0 / al)) ** (al / (al - 1.0))
               * math.log(2.0 * schedule.d
                          / (schedule.c_norm * schedule.delta))
               * sum((1.0 / g) ** (al / (al - 1.0)) for g in gaps))
    return PullsBound(taus, closed, dom)
