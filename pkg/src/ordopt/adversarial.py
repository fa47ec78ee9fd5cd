"""Lower-bound gadgets: tail tilts, sample floors, quantile mixtures.

The tilt takes a distribution G with unbounded upper support and returns a
close-in-KL distribution with a much larger mean, by down-weighting mass
below a split point b and lifting the tail above it. Split points land far
out in the tail (the flagship instance has b around 2200 where survival
probabilities underflow), so the class keeps its tail bookkeeping in log
space: the survival mass and tail moments come from quadrature shifted by
the log-density at the split.

monte_carlo_fs is the measurement harness shared by every selection
policy: it
replays a policy over independent replication streams and aggregates the
false-selection rate with a normal-approximation confidence band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate

from .populations import GaussianMixture, kl_divergence, quantile

__all__ = [
    "TiltedDistribution", "QuantileGadget", "FsEstimate",
    "tilt", "lower_bound_samples", "quantile_gadget", "monte_carlo_fs",
]

_MAX_DOUBLINGS = 60


def _log_upper_tail(base, x0: float, moment: int = 0) -> float:
    """log of int_{x0}^inf x^moment g(x) dx, stable when the tail underflows.

    Shifts by logpdf(x0) so the integrand is O(1) near the split; x0 must
    be positive when moment = 1 (tilt split points always are).
    """
    l0 = float(np.asarray(base.logpdf(x0)))
    if not math.isfinite(l0):
        return -math.inf

    def h(t):
        lp = float(np.asarray(base.logpdf(x0 + t))) - l0
        v = math.exp(min(lp, 700.0))
        return v * (x0 + t) if moment else v

    val, _ = integrate.quad(h, 0.0, math.inf, limit=200)
    return l0 + math.log(val) if val > 0 else -math.inf


def _log_sf(base, x: float) -> float:
    sf = 1.0 - float(np.asarray(base.cdf(x)))
    if sf > 1e-250:
        return math.log(sf)
    return _log_upper_tail(base, x, 0)


@dataclass(frozen=True)
class TiltedDistribution:
    """Density (1-gamma) g(x) below b, beta_factor g(x) from b up."""

    base: object
    b: float
    gamma: float
    beta_factor: float

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        expected = self._log_beta
        if math.isinf(self.beta_factor):
            ok = expected > 700.0
        else:
            ok = (self.beta_factor >= 1.0
                  and abs(self.beta_factor - math.exp(expected))
                  <= 1e-6 * self.beta_factor)
        if not ok:
            raise ValueError("beta_factor is inconsistent with gamma and "
                             "the base mass split at b")

    @cached_property
    def _g_below(self) -> float:
        return float(np.asarray(self.base.cdf(self.b)))

    @cached_property
    def _log_gbar(self) -> float:
        return _log_sf(self.base, self.b)

    @cached_property
    def _log_beta(self) -> float:
        # beta = 1 + gamma G(b)/Gbar(b), in logs when the ratio explodes
        if self._g_below == 0.0:
            return 0.0
        r_log = (math.log(self.gamma) + math.log(self._g_below)
                 - self._log_gbar)
        if r_log > 36.0:  # log1p(e^r) = r beyond double resolution
            return r_log
        return math.log1p(math.exp(r_log))

    def support(self):
        return self.base.support()

    def atoms(self):
        return None

    def logpdf(self, x):
        arr = np.asarray(x, dtype=float)
        return self.base.logpdf(arr) + np.where(
            arr < self.b, math.log1p(-self.gamma), self._log_beta)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.empty(arr.shape)
        for i, xi in np.ndenumerate(arr):
            out[i] = self._cdf_scalar(float(xi))
        return out if arr.shape else float(out)

    def _cdf_scalar(self, x):
        if x < self.b:
            return (1.0 - self.gamma) * float(np.asarray(self.base.cdf(x)))
        expo = self._log_beta + _log_sf(self.base, x)
        return 1.0 - math.exp(min(expo, 0.0))

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise ValueError("p must lie strictly between 0 and 1")
        below_mass = (1.0 - self.gamma) * self._g_below
        if p < below_mass:
            return float(self.base.quantile(p / (1.0 - self.gamma)))
        # in the lifted tail solve beta Gbar(x) = 1 - p for x >= b
        target = math.log1p(-p) - self._log_beta
        lo, hi = self.b, 2.0 * abs(self.b) + 1.0
        while _log_sf(self.base, hi) > target:
            lo, hi = hi, 2.0 * hi
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _log_sf(self.base, mid) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, abs(hi)):
                break
        return 0.5 * (lo + hi)

    def mean(self) -> float:
        # split E X = (below-b part) + (tail part), tail in log space
        log_tail_x = _log_upper_tail(self.base, self.b, 1)
        tail_x = math.exp(log_tail_x)
        lifted = math.exp(self._log_beta + log_tail_x)
        return (1.0 - self.gamma) * (self.base.mean() - tail_x) + lifted

    def total_mass(self) -> float:
        return ((1.0 - self.gamma) * self._g_below
                + math.exp(self._log_beta + self._log_gbar))

    def kl_from_base(self) -> float:
        """KL(base, tilted) exactly: -G(b) log(1-gamma) - Gbar(b) log beta."""
        kl = (-self._g_below * math.log1p(-self.gamma)
              - math.exp(self._log_gbar) * self._log_beta)
        return max(kl, 0.0)


def _make_tilted(base, gamma: float, b: float) -> TiltedDistribution:
    probe = TiltedDistribution.__new__(TiltedDistribution)
    object.__setattr__(probe, "base", base)
    object.__setattr__(probe, "b", b)
    object.__setattr__(probe, "gamma", gamma)
    log_beta = probe._log_beta
    beta = math.exp(log_beta) if log_beta < 709.0 else math.inf
    return TiltedDistribution(base, b, gamma, beta)


def tilt(base, alpha_target: float, k: float) -> TiltedDistribution:
    """KL-budgeted mean lift: KL(base, result) <= alpha_target, mean >= k.

    gamma = 1 - exp(-alpha_target/2); the split b doubles from 2|mu| + 1
    until the mean lower bound exp(-alpha/2) mu + gamma G(b) b reaches k,
    then the exact (quadrature) tilted mean confirms; both certified
    inequalities are re-checked on the returned object.
    """
    if alpha_target <= 0.0:
        raise ValueError("alpha_target must be positive")
    hi_support = base.support()[1]
    if math.isfinite(hi_support):
        raise ValueError("unsupported support: the tilt needs unbounded "
                         "upper support to lift the mean")
    mu = base.mean()
    if k <= mu:
        raise ValueError("trivial request: k must exceed the base mean")
    gamma = -math.expm1(-alpha_target / 2.0)
    damp = math.exp(-alpha_target / 2.0)
    b = 2.0 * abs(mu) + 1.0
    for _ in range(_MAX_DOUBLINGS):
        cert = damp * mu + gamma * float(np.asarray(base.cdf(b))) * b
        if cert >= k:
            tilted = _make_tilted(base, gamma, b)
            if tilted.mean() >= k:
                break
        b *= 2.0
    else:
        raise RuntimeError("no split point certified the requested mean "
                           "within the doubling budget")
    if tilted.kl_from_base() > alpha_target + 1e-12:
        raise RuntimeError("tilt construction exceeded its KL budget")
    return tilted


def lower_bound_samples(g, g_tilde, delta: float) -> float:
    """Sample floor log(1/delta)/(3 KL(g, g_tilde)) for delta-correct
    policies facing the g versus g_tilde dichotomy."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    kl = kl_divergence(g, g_tilde)
    if kl <= 0.0 or math.isinf(kl):
        raise ValueError("degenerate bound: KL must be finite and positive")
    return math.log(1.0 / delta) / (3.0 * kl)


@dataclass(frozen=True)
class QuantileGadget:
    g: GaussianMixture
    g_eps: GaussianMixture
    kl_bound: float
    quantile_gap: float


def quantile_gadget(p: float, epsilon: float, mu: float) -> QuantileGadget:
    """Gaussian-mixture pair whose p-quantiles split by an arbitrary gap.

    g mixes (p, 1-p) over N(0,1) and N(mu,1); g_eps shifts weight epsilon
    off the first component. Their KL stays below log(p/(p-epsilon))
    regardless of mu, while the p-quantile gap grows with mu.
    """
    if not 0.0 < p <= 0.5:
        raise ValueError("p must lie in (0, 1/2]")
    if not 0.0 < epsilon < p:
        raise ValueError("epsilon must lie in (0, p)")
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    g = GaussianMixture(p, mu)
    g_eps = GaussianMixture(p - epsilon, mu)
    bound = math.log(p / (p - epsilon))
    kl = kl_divergence(g, g_eps)
    if kl > bound + 1e-9:
        raise RuntimeError("mixture KL exceeded its closed-form bound")
    gap = quantile(g_eps, p) - quantile(g, p)
    return QuantileGadget(g, g_eps, bound, gap)


@dataclass(frozen=True)
class FsEstimate:
    fs_rate: float
    ci_halfwidth: float
    mean_samples: float


def monte_carlo_fs(policy, truth, delta: float, replications: int,
                   seed: int) -> FsEstimate:
    """Replay policy(truth, delta, seed, stream) over independent streams.

    Aggregates are order-invariant sums, so replications can run in any
    order or in parallel; stream r is replication r. The policy outcome
    must carry a false_selection flag; a tie in true means leaves it unset
    and is rejected here.
    """
    if replications < 1:
        raise ValueError("replications must be at least 1")
    fs_count = 0
    total_samples = 0
    for r in range(replications):
        out = policy(truth, delta, seed, r)
        if out.false_selection is None:
            raise ValueError("undefined truth: tied true means make the "
                             "false-selection rate meaningless")
        fs_count += bool(out.false_selection)
        total_samples += sum(out.per_arm_samples)
    rate = fs_count / replications
    half = 2.576 * math.sqrt(rate * (1.0 - rate) / replications)
    return FsEstimate(rate, half, total_samples / replications)
