"""Analytic population models.

Each model knows its mean, exact log-MGF Lambda(theta) = log E exp(theta X)
with domain, sampler, CDF/quantile, and either a discrete atom list or a
log-density. On top of that the module provides the Legendre-transform rate
function I(a) = sup_theta (theta a - Lambda(theta)), KL divergence between
models, and an exact finite-sample law for the two-point rate estimator that
the test harnesses use as an oracle.

Sampling is keyed by (seed, stream) through a counter-based Philox
generator, so any replication is reproducible in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .empirical_rate import (RateEstimate, empirical_log_mgf,
                             estimate_rate_at)

__all__ = [
    "SupportError", "SampleBatch", "TwoPoint", "ShiftedExponential",
    "Gaussian", "GaussianMixture", "Bernoulli", "Pareto", "Empirical",
    "Mirrored", "sample", "log_mgf", "rate_function", "kl_divergence",
    "quantile", "two_point_rate_law", "model_to_dict", "model_from_dict",
]

_THETA_CAP = 2.0 ** 10
_LOG_NORM_CONST = -0.5 * math.log(2.0 * math.pi)


class SupportError(ValueError):
    """Two models whose supports cannot be compared (discrete vs density)."""


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """An ordered i.i.d. batch with its seed lineage."""

    values: np.ndarray
    model_id: str | None = None
    seed: int = 0
    stream_index: int = 0

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("batch must hold at least one real value")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size


def _check_prob(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class TwoPoint:
    """X = -b with probability p_minus, +b otherwise."""

    b: float = 1.0
    p_minus: float = 0.5

    def __post_init__(self):
        if self.b <= 0:
            raise ValueError("b must be positive")
        _check_prob("p_minus", self.p_minus)

    def mean(self):
        return self.b * (1.0 - 2.0 * self.p_minus)

    def theta_domain(self):
        return (-math.inf, math.inf)

    def log_mgf(self, theta):
        p = self.p_minus
        if p == 0.0:
            return theta * self.b
        if p == 1.0:
            return -theta * self.b
        return float(np.logaddexp(math.log(p) - theta * self.b,
                                  math.log1p(-p) + theta * self.b))

    def dlog_mgf(self, theta):
        p = self.p_minus
        if p == 0.0:
            return self.b
        if p == 1.0:
            return -self.b
        # weight of +b under the tilted law
        z = -2.0 * theta * self.b + _logit(p)
        w = 1.0 / (1.0 + math.exp(z)) if z < 700 else 0.0
        return self.b * (2.0 * w - 1.0)

    def support(self):
        return (-self.b, self.b)

    def atoms(self):
        return [(-self.b, self.p_minus), (self.b, 1.0 - self.p_minus)]

    def logpdf(self, x):
        return None

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < -self.b, 0.0,
                        np.where(x < self.b, self.p_minus, 1.0))

    def quantile(self, p):
        return -self.b if p <= self.p_minus else self.b

    def draw(self, rng, n):
        u = rng.random(n)
        return np.where(u < self.p_minus, -self.b, self.b)


def _logit(p):
    return math.log(p) - math.log1p(-p)


@dataclass(frozen=True)
class ShiftedExponential:
    """X = K - Y with Y exponential(lam): upper-bounded, heavy lower tail."""

    K: float = 0.0
    lam: float = 1.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lam must be positive")

    def mean(self):
        return self.K - 1.0 / self.lam

    def theta_domain(self):
        return (-self.lam, math.inf)

    def log_mgf(self, theta):
        if theta <= -self.lam:
            return math.inf
        return theta * self.K - math.log1p(theta / self.lam)

    def dlog_mgf(self, theta):
        return self.K - 1.0 / (self.lam + theta)

    def support(self):
        return (-math.inf, self.K)

    def atoms(self):
        return None

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x <= self.K,
                       math.log(self.lam) - self.lam * (self.K - x),
                       -math.inf)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.K, 1.0, np.exp(-self.lam * (self.K - x)))

    def quantile(self, p):
        return self.K + math.log(p) / self.lam

    def draw(self, rng, n):
        return self.K - rng.exponential(1.0 / self.lam, n)


@dataclass(frozen=True)
class Gaussian:
    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def mean(self):
        return self.mu

    def theta_domain(self):
        return (-math.inf, math.inf)

    def log_mgf(self, theta):
        return theta * self.mu + 0.5 * (theta * self.sigma) ** 2

    def dlog_mgf(self, theta):
        return self.mu + theta * self.sigma ** 2

    def support(self):
        return (-math.inf, math.inf)

    def atoms(self):
        return None

    def logpdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return _LOG_NORM_CONST - math.log(self.sigma) - 0.5 * z * z

    def cdf(self, x):
        return ndtr((np.asarray(x, dtype=float) - self.mu) / self.sigma)

    def quantile(self, p):
        return self.mu + self.sigma * float(ndtri(p))

    def draw(self, rng, n):
        return self.mu + self.sigma * rng.standard_normal(n)


@dataclass(frozen=True)
class GaussianMixture:
    """p N(0, 1) + (1 - p) N(mu, 1)."""

    p: float = 0.5
    mu: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")

    def mean(self):
        return (1.0 - self.p) * self.mu

    def theta_domain(self):
        return (-math.inf, math.inf)

    def log_mgf(self, theta):
        return 0.5 * theta * theta + float(
            np.logaddexp(math.log(self.p),
                         math.log1p(-self.p) + theta * self.mu))

    def dlog_mgf(self, theta):
        # weight of the mu-component under the theta-tilt
        z = theta * self.mu + math.log1p(-self.p) - math.log(self.p)
        w = 1.0 / (1.0 + math.exp(-z)) if z > -700 else 0.0
        return theta + self.mu * w

    def support(self):
        return (-math.inf, math.inf)

    def atoms(self):
        return None

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        a = math.log(self.p) + _LOG_NORM_CONST - 0.5 * x * x
        b = (math.log1p(-self.p) + _LOG_NORM_CONST
             - 0.5 * (x - self.mu) ** 2)
        return np.logaddexp(a, b)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.p * ndtr(x) + (1.0 - self.p) * ndtr(x - self.mu)

    def quantile(self, p):
        lo = min(float(ndtri(p)), self.mu + float(ndtri(p))) - 1.0
        hi = max(float(ndtri(p)), self.mu + float(ndtri(p))) + 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.cdf(mid)) >= p:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 1e-10:
                break
        return 0.5 * (lo + hi)

    def draw(self, rng, n):
        x = rng.standard_normal(n)
        shift = rng.random(n) >= self.p
        return x + self.mu * shift


@dataclass(frozen=True)
class Bernoulli:
    q: float = 0.5

    def __post_init__(self):
        _check_prob("q", self.q)

    def mean(self):
        return self.q

    def theta_domain(self):
        return (-math.inf, math.inf)

    def log_mgf(self, theta):
        if self.q == 0.0:
            return 0.0
        if self.q == 1.0:
            return theta
        return float(np.logaddexp(math.log1p(-self.q),
                                  math.log(self.q) + theta))

    def dlog_mgf(self, theta):
        if self.q in (0.0, 1.0):
            return self.q
        z = -theta - _logit(self.q)
        return 1.0 / (1.0 + math.exp(z)) if z < 700 else 0.0

    def support(self):
        return (0.0, 1.0)

    def atoms(self):
        return [(0.0, 1.0 - self.q), (1.0, self.q)]

    def logpdf(self, x):
        return None

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0.0, 0.0, np.where(x < 1.0, 1.0 - self.q, 1.0))

    def quantile(self, p):
        return 0.0 if p <= 1.0 - self.q else 1.0

    def draw(self, rng, n):
        return (rng.random(n) < self.q).astype(float)


@dataclass(frozen=True)
class Pareto:
    """P(X > x) = (scale/x)^alpha_tail for x >= scale; heavy upper tail."""

    alpha_tail: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if self.alpha_tail <= 1:
            raise ValueError("alpha_tail must exceed 1 for a finite mean")
        if self.scale <= 0:
            raise ValueError("scale must be positive")

    def mean(self):
        return self.alpha_tail * self.scale / (self.alpha_tail - 1.0)

    def theta_domain(self):
        return (-math.inf, 0.0)

    def log_mgf(self, theta):
        if theta > 0.0:
            return math.inf
        if theta == 0.0:
            return 0.0
        a, s = self.alpha_tail, self.scale
        # x = s(1+v): E exp(theta X) = a e^{theta s} int e^{theta s v} (1+v)^{-(a+1)} dv
        val, _ = integrate.quad(
            lambda v: math.exp(theta * s * v) * (1.0 + v) ** (-(a + 1.0)),
            0.0, math.inf, limit=200)
        return theta * s + math.log(a * val)

    def dlog_mgf(self, theta):
        if theta == 0.0:
            return self.mean()
        a, s = self.alpha_tail, self.scale
        num, _ = integrate.quad(
            lambda v: math.exp(theta * s * v) * (1.0 + v) ** (-a),
            0.0, math.inf, limit=200)
        den, _ = integrate.quad(
            lambda v: math.exp(theta * s * v) * (1.0 + v) ** (-(a + 1.0)),
            0.0, math.inf, limit=200)
        return s * num / den

    def support(self):
        return (self.scale, math.inf)

    def atoms(self):
        return None

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        a, s = self.alpha_tail, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(x >= s,
                           math.log(a) + a * math.log(s)
                           - (a + 1.0) * np.log(np.maximum(x, s)),
                           -math.inf)
        return out

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.scale, 0.0,
                        1.0 - (self.scale / np.maximum(x, self.scale))
                        ** self.alpha_tail)

    def quantile(self, p):
        return self.scale * (1.0 - p) ** (-1.0 / self.alpha_tail)

    def draw(self, rng, n):
        return self.scale * (1.0 - rng.random(n)) ** (-1.0 / self.alpha_tail)

    def abs_moment(self, r):
        """E |X|^r, finite for r < alpha_tail."""
        if r >= self.alpha_tail:
            return math.inf
        return (self.alpha_tail * self.scale ** r
                / (self.alpha_tail - r))


@dataclass(frozen=True, eq=False)
class Empirical:
    """Discrete uniform over the points of a batch."""

    points: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        arr = np.asarray(getattr(self.points, "values", self.points),
                         dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("empirical model needs at least one point")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "points", arr)

    def mean(self):
        return float(self.points.mean())

    def theta_domain(self):
        return (-math.inf, math.inf)

    def log_mgf(self, theta):
        return empirical_log_mgf(self.points, theta)

    def dlog_mgf(self, theta):
        t = theta * self.points
        w = np.exp(t - t.max())
        return float((self.points * w).sum() / w.sum())

    def support(self):
        return (float(self.points.min()), float(self.points.max()))

    def atoms(self):
        vals, counts = np.unique(self.points, return_counts=True)
        m = self.points.size
        return [(float(v), c / m) for v, c in zip(vals, counts)]

    def logpdf(self, x):
        return None

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.searchsorted(np.sort(self.points), x, side="right") \
            / self.points.size

    def quantile(self, p):
        xs = np.sort(self.points)
        k = max(int(math.ceil(p * xs.size)), 1)
        return float(xs[k - 1])

    def draw(self, rng, n):
        return self.points[rng.integers(0, self.points.size, n)]


@dataclass(frozen=True)
class Mirrored:
    """The law of -X for a base model X; swaps the heavy-tail side."""

    base: object

    def mean(self):
        return -self.base.mean()

    def theta_domain(self):
        lo, hi = self.base.theta_domain()
        return (-hi, -lo)

    def log_mgf(self, theta):
        return self.base.log_mgf(-theta)

    def dlog_mgf(self, theta):
        return -self.base.dlog_mgf(-theta)

    def support(self):
        lo, hi = self.base.support()
        return (-hi, -lo)

    def atoms(self):
        base = self.base.atoms()
        if base is None:
            return None
        return sorted((-x, p) for x, p in base)

    def logpdf(self, x):
        inner = self.base.logpdf(-np.asarray(x, dtype=float))
        return inner

    def cdf(self, x):
        # continuous bases only; P(-X <= x) = 1 - F(-x)
        if self.base.atoms() is not None:
            raise NotImplementedError("mirrored CDF for discrete bases")
        return 1.0 - self.base.cdf(-np.asarray(x, dtype=float))

    def quantile(self, p):
        return -self.base.quantile(1.0 - p)

    def draw(self, rng, n):
        return -self.base.draw(rng, n)


def sample(model, seed: int, stream: int, n: int) -> SampleBatch:
    """n i.i.d. draws keyed by (seed, stream); identical keys, identical batch."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= seed < 2 ** 64 or not 0 <= stream < 2 ** 64:
        raise ValueError("seed and stream must fit in 64 bits")
    rng = np.random.Generator(np.random.Philox(key=[seed, stream]))
    values = model.draw(rng, int(n))
    return SampleBatch(values, model_id=str(model), seed=seed,
                       stream_index=stream)


def log_mgf(model, theta: float) -> float:
    """Lambda(theta) = log E exp(theta X); +inf outside the MGF domain."""
    return model.log_mgf(float(theta))


def _rate_two_atoms(lo, hi, p_lo, a):
    """Closed-form rate for a two-atom law at 'a', with optimizer."""
    if a < lo:
        return RateEstimate(math.inf, None, "diverges-left", 0)
    if a > hi:
        return RateEstimate(math.inf, None, "diverges-right", 0)
    if a == lo:
        if p_lo == 1.0:
            return RateEstimate(0.0, 0.0, "at-mean", 0)
        if p_lo == 0.0:
            return RateEstimate(math.inf, None, "diverges-left", 0)
        return RateEstimate(-math.log(p_lo), -_THETA_CAP, "interior", 0)
    if a == hi:
        p_hi = 1.0 - p_lo
        if p_hi == 1.0:
            return RateEstimate(0.0, 0.0, "at-mean", 0)
        if p_hi == 0.0:
            return RateEstimate(math.inf, None, "diverges-right", 0)
        return RateEstimate(-math.log(p_hi), _THETA_CAP, "interior", 0)
    if p_lo == 0.0:
        return RateEstimate(math.inf, None, "diverges-left", 0)
    if p_lo == 1.0:
        return RateEstimate(math.inf, None, "diverges-right", 0)
    s = (a - lo) / (hi - lo)        # required mass on the upper atom
    p_hi = 1.0 - p_lo
    val = s * math.log(s / p_hi) + (1.0 - s) * math.log((1.0 - s) / p_lo)
    theta = (math.log(s / p_hi) - math.log((1.0 - s) / p_lo)) / (hi - lo)
    status = "at-mean" if val <= 1e-15 else "interior"
    return RateEstimate(max(val, 0.0), theta, status, 0)


def rate_function(model, a: float) -> RateEstimate:
    """I(a) = sup_theta (theta a - Lambda(theta)).

    Closed forms for the two-atom models and the Gaussian; elsewhere the
    concave problem is solved by bisecting Lambda'(theta) = a on the MGF
    domain. Points outside the support give +infinity; a heavy tail on the
    'a' side gives 0 with the optimizer at the domain boundary.
    """
    a = float(a)
    if isinstance(model, TwoPoint):
        return _rate_two_atoms(-model.b, model.b, model.p_minus, a)
    if isinstance(model, Bernoulli):
        return _rate_two_atoms(0.0, 1.0, 1.0 - model.q, a)
    if isinstance(model, Gaussian):
        theta = (a - model.mu) / model.sigma ** 2
        val = 0.5 * ((a - model.mu) / model.sigma) ** 2
        status = "at-mean" if a == model.mu else "interior"
        return RateEstimate(val, theta, status, 0)
    if isinstance(model, Empirical):
        return estimate_rate_at(model.points, a)

    lo_s, hi_s = model.support()
    if a < lo_s:
        return RateEstimate(math.inf, None, "diverges-left", 0)
    if a > hi_s:
        return RateEstimate(math.inf, None, "diverges-right", 0)
    if a == model.mean():
        return RateEstimate(0.0, 0.0, "at-mean", 0)

    d_lo, d_hi = model.theta_domain()

    def deriv(theta):
        return model.dlog_mgf(theta) - a

    # bracket the root of Lambda' = a. The domain edge is either infinite
    # (step geometrically, capped), an open pole where Lambda' blows up
    # (halve toward it), or a closed finite endpoint (evaluate there).
    lo = -1.0 if math.isinf(d_lo) else 0.5 * d_lo
    f_lo = deriv(lo)
    for _ in range(100):
        if f_lo < 0:
            break
        if math.isinf(d_lo):
            if lo <= -_THETA_CAP:
                break
            lo *= 2.0
        else:
            nxt = 0.5 * (lo + d_lo)
            if nxt == lo:
                break
            lo = nxt
        f_lo = deriv(lo)

    hi = 1.0 if math.isinf(d_hi) else d_hi
    if not math.isinf(d_hi) and not math.isfinite(model.log_mgf(d_hi)):
        hi = 0.5 * d_hi if d_hi != 0.0 else -1e-8
    f_hi = deriv(hi)
    for _ in range(100):
        if f_hi > 0:
            break
        if math.isinf(d_hi):
            if hi >= _THETA_CAP:
                break
            hi *= 2.0
        elif hi == d_hi:
            break
        else:
            nxt = 0.5 * (hi + d_hi)
            if nxt == hi:
                break
            hi = nxt
        f_hi = deriv(hi)

    if f_hi <= 0:
        # supremum sits at the right end of the reachable domain
        val = hi * a - model.log_mgf(hi)
        return RateEstimate(max(val, 0.0), hi, "interior", 0)
    if f_lo >= 0:
        val = lo * a - model.log_mgf(lo)
        return RateEstimate(max(val, 0.0), lo, "interior", 0)

    it = 0
    for it in range(1, 200):
        mid = 0.5 * (lo + hi)
        fm = deriv(mid)
        if fm > 0:
            hi = mid
        else:
            lo = mid
        if abs(fm) <= 1e-11 * max(1.0, abs(a)) and hi - lo <= 1e-12 * max(
                1.0, abs(mid)):
            break
    theta = 0.5 * (lo + hi)
    val = theta * a - model.log_mgf(theta)
    return RateEstimate(max(val, 0.0), theta, "interior", it)


def _kl_discrete(g_atoms, gt_atoms):
    q = {}
    for x, p in gt_atoms:
        q[x] = q.get(x, 0.0) + p
    total = 0.0
    for x, p in g_atoms:
        if p == 0.0:
            continue
        mass = q.get(x, 0.0)
        if mass == 0.0:
            return math.inf
        total += p * math.log(p / mass)
    return max(total, 0.0)


def _kl_continuous(g, gt):
    g_lo, g_hi = g.support()
    t_lo, t_hi = gt.support()
    if g_lo < t_lo or g_hi > t_hi:
        return math.inf

    def integrand(x):
        arr = np.asarray(x, dtype=float)
        lg = g.logpdf(arr)
        lt = gt.logpdf(arr)
        out = np.where(np.isfinite(lg), np.exp(lg) * (lg - lt), 0.0)
        return out

    # clip infinite endpoints at extreme quantiles; the integrand decays
    # like the g-density there, so the truncation is far below tolerance
    lo = g_lo if math.isfinite(g_lo) else g.quantile(1e-14)
    hi = g_hi if math.isfinite(g_hi) else g.quantile(1.0 - 1e-14)
    val, _ = integrate.quad(integrand, lo, hi, limit=400, epsabs=1e-13,
                            epsrel=1e-10)
    return max(val, 0.0)


def kl_divergence(g, g_tilde) -> float:
    """KL(g || g_tilde); +inf when absolute continuity fails.

    Gaussian and Bernoulli pairs use closed forms; any discrete pair reduces
    to an atom sum; density pairs go through adaptive quadrature. Mixing a
    discrete model with a density model raises SupportError.
    """
    if isinstance(g, Gaussian) and isinstance(g_tilde, Gaussian):
        r = g.sigma / g_tilde.sigma
        return (math.log(g_tilde.sigma / g.sigma)
                + 0.5 * (r * r - 1.0)
                + 0.5 * ((g.mu - g_tilde.mu) / g_tilde.sigma) ** 2)
    ga, ta = g.atoms(), g_tilde.atoms()
    if (ga is None) != (ta is None):
        raise SupportError(
            "cannot compare a discrete model with a density model")
    if ga is not None:
        return _kl_discrete(ga, ta)
    return _kl_continuous(g, g_tilde)


def quantile(model, p: float) -> float:
    """Generalized inverse CDF, inf{x : F(x) >= p}."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    return float(model.quantile(float(p)))


def two_point_rate_law(m: int, p_minus: float):
    """Exact law of the two-point rate estimate for a batch of size m.

    The estimate depends on the batch only through k = #{positive samples}:
    +infinity at k in {0, m}, else log(m / (2 sqrt(k (m - k)))). Returns
    [(k, P(K = k), value)] for k = 0..m with exact binomial weights.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    _check_prob("p_minus", p_minus)
    p_plus = 1.0 - p_minus
    out = []
    for k in range(m + 1):
        if p_plus in (0.0, 1.0):
            logp = 0.0 if (k == m) == (p_plus == 1.0) else -math.inf
        else:
            logp = (math.lgamma(m + 1) - math.lgamma(k + 1)
                    - math.lgamma(m - k + 1)
                    + k * math.log(p_plus) + (m - k) * math.log(p_minus))
        prob = math.exp(logp) if logp > -math.inf else 0.0
        if k in (0, m):
            value = math.inf
        else:
            value = math.log(m / (2.0 * math.sqrt(k * (m - k))))
        out.append((k, prob, max(value, 0.0)))
    return out


_VARIANTS = {
    "two-point": (TwoPoint, ("b", "p_minus")),
    "shifted-exponential": (ShiftedExponential, ("K", "lam")),
    "gaussian": (Gaussian, ("mu", "sigma")),
    "gaussian-mixture": (GaussianMixture, ("p", "mu")),
    "bernoulli": (Bernoulli, ("q",)),
    "pareto": (Pareto, ("alpha_tail", "scale")),
}


def model_to_dict(model) -> dict:
    """Serializable {variant, params} form; inverse of model_from_dict."""
    if isinstance(model, Mirrored):
        inner = model_to_dict(model.base)
        return {"variant": "mirrored", "base": inner}
    if isinstance(model, Empirical):
        return {"variant": "empirical",
                "points": [float(v) for v in model.points]}
    for name, (cls, fields) in _VARIANTS.items():
        if type(model) is cls:
            return {"variant": name,
                    **{f: getattr(model, f) for f in fields}}
    raise ValueError(f"unknown model type {type(model).__name__}")


def model_from_dict(spec: dict):
    spec = dict(spec)
    variant = spec.pop("variant", None)
    if variant == "mirrored":
        return Mirrored(model_from_dict(spec["base"]))
    if variant == "empirical":
        return Empirical(np.asarray(spec["points"], dtype=float))
    if variant not in _VARIANTS:
        raise ValueError(f"unknown model variant {variant!r}")
    cls, fields = _VARIANTS[variant]
    unknown = set(spec) - set(fields)
    if unknown:
        raise ValueError(f"unknown parameters for {variant}: {sorted(unknown)}")
    return cls(**{f: float(spec[f]) for f in fields if f in spec})
