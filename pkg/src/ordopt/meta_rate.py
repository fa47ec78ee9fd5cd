"""Second-level rate functions for the rate estimator itself.

The plug-in rate estimate I_m(0) concentrates around I(0) with its own
large-deviations behavior, driven for each tilt theta by the rate function
of the empirical mean of W = exp(theta X):

    J_theta(nu) = sup_alpha ( alpha nu - log E exp(alpha W) ).

This module evaluates J_theta (meta_rate), its infimum over theta (the decay
rate of upward errors P(I_m(0) >= a) for a above I(0)), its supremum over
the set Theta_a = {theta : Lambda(theta) <= -a} (downward errors, which
collapse to rate zero whenever some W has a heavy upper tail), the optimal
two-phase budget split built on top of it, and the certificate that a
sequential stopping rule built on the proxy exp(-m I_m(0)) over-delivers
false selections relative to its target delta.

Conventions: alpha_star is reported as the maximizer of the defining sup,
except in the sequential certificate for the shifted-exponential model,
where the reported alpha_star multiplies z in the substituted integrals
  int_1^inf exp(-alpha z) z^{-lam/theta - 1} dz
(the form the closed-form residual equations are written in).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ._solve import grid_then_golden
from .populations import ShiftedExponential, rate_function

__all__ = [
    "RegimeError", "NumericalError", "MetaRateResult", "TwoPhaseExponent",
    "tilted_log_mgf", "meta_rate", "inf_meta_rate",
    "sup_meta_rate_on_theta_a", "two_phase_exponent",
    "sequential_failure_certificate",
]

_THETA_BRACKET = 64.0
_ALPHA_CAP = 2.0 ** 30


class RegimeError(ValueError):
    """The requested quantity is defined in a different parameter regime."""


class NumericalError(RuntimeError):
    """A solver failed to converge; .best carries the final iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class MetaRateResult:
    value: float
    alpha_star: float | None
    theta: float
    nu: float


@dataclass(frozen=True)
class TwoPhaseExponent:
    exponent: float
    gamma_star: float
    theta_star: float
    alpha_star: float
    c1: float
    c2: float


def _w_bounds(model, theta):
    """Essential range of W = exp(theta X)."""
    lo_s, hi_s = model.support()
    if theta == 0.0:
        return 1.0, 1.0
    if theta > 0:
        w_lo = math.exp(theta * lo_s) if math.isfinite(lo_s) else 0.0
        w_hi = math.exp(theta * hi_s) if math.isfinite(hi_s) else math.inf
    else:
        w_lo = math.exp(theta * hi_s) if math.isfinite(hi_s) else 0.0
        w_hi = math.exp(theta * lo_s) if math.isfinite(lo_s) else math.inf
    return w_lo, w_hi


def _atom_arrays(model, theta):
    atoms = model.atoms()
    x = np.array([a for a, _ in atoms])
    p = np.array([q for _, q in atoms])
    keep = p > 0
    x, p = x[keep], p[keep]
    return x, p, np.exp(theta * x)


def _atom_moments(x, p, w, alpha):
    """(M, T, XW/den) for atom laws: log E e^{aW}, tilted W-mean, tilted
    E[X W] under the alpha-tilt. Shift makes it safe for any finite alpha."""
    t = alpha * w
    hi = t.max()
    e = p * np.exp(t - hi)
    den = e.sum()
    m_val = hi + math.log(den)
    t_mean = float((w * e).sum() / den)
    xw = float((x * w * e).sum() / den)
    return m_val, t_mean, xw


def _quantile_box(model):
    lo_s, hi_s = model.support()
    lo = lo_s if math.isfinite(lo_s) else model.quantile(1e-14)
    hi = hi_s if math.isfinite(hi_s) else model.quantile(1.0 - 1e-14)
    return lo, hi


def _quad_moments(model, theta, alpha, want_xw=False):
    """Quadrature analogue of _atom_moments for density models."""
    w_lo, w_hi = _w_bounds(model, theta)
    if alpha > 0 and not math.isfinite(w_hi):
        return math.inf, math.nan, math.nan
    shift = alpha * (w_hi if alpha > 0 else w_lo)
    lo, hi = _quantile_box(model)

    def expo(xa):
        w = np.exp(theta * xa)
        t = alpha * w - shift + model.logpdf(xa)
        return t

    def den_f(xa):
        xa = np.asarray(xa, dtype=float)
        return np.exp(np.minimum(expo(xa), 700.0))

    def num_f(xa):
        xa = np.asarray(xa, dtype=float)
        return np.exp(theta * xa) * np.exp(np.minimum(expo(xa), 700.0))

    den, _ = integrate.quad(den_f, lo, hi, limit=400)
    if den <= 0.0:
        # alpha so extreme that all mass underflows: saturated regime
        return -math.inf, w_lo if alpha < 0 else w_hi, 0.0
    num, _ = integrate.quad(num_f, lo, hi, limit=400)
    m_val = shift + math.log(den)
    t_mean = num / den
    xw = math.nan
    if want_xw:
        def xw_f(xa):
            xa = np.asarray(xa, dtype=float)
            return xa * np.exp(theta * xa) \
                * np.exp(np.minimum(expo(xa), 700.0))
        xw_num, _ = integrate.quad(xw_f, lo, hi, limit=400)
        xw = xw_num / den
    return m_val, t_mean, xw


def _moments(model, theta, alpha, want_xw=False):
    if model.atoms() is not None:
        x, p, w = _atom_arrays(model, theta)
        return _atom_moments(x, p, w, alpha)
    return _quad_moments(model, theta, alpha, want_xw)


def tilted_log_mgf(model, alpha: float, theta: float) -> float:
    """M(alpha, theta) = log E exp(alpha exp(theta X)); +inf on divergence.

    Finite atom laws reduce to a shifted log-sum; density models integrate
    the tilted density by adaptive quadrature. When exp(theta X) is
    unbounded above its tail is at best polynomial for every model here, so
    alpha > 0 diverges.
    """
    if alpha == 0.0:
        return 0.0
    if theta == 0.0:
        return float(alpha)
    m_val, _, _ = _moments(model, theta, alpha)
    return m_val


def meta_rate(model, theta: float, nu: float) -> MetaRateResult:
    """J_theta(nu) = sup_alpha (alpha nu - M(alpha)) by bisection on the
    tilted-mean equation M'(alpha) = nu.

    The domain of M is all of R when W = exp(theta X) is bounded above and
    (-inf, 0] otherwise; in the latter case levels nu >= E W sit at the
    boundary alpha = 0 with value 0 (no decay through that tilt). Levels at
    or below the essential infimum of W give +infinity for density models
    and -log(mass) for an atom there; the search saturates at a huge alpha
    in that regime and reports the boundary value.
    """
    nu = float(nu)
    if nu <= 0:
        raise ValueError("nu must be positive")
    w_lo, w_hi = _w_bounds(model, theta)
    if w_lo == w_hi:
        value = 0.0 if abs(nu - w_lo) < 1e-12 else math.inf
        return MetaRateResult(value, 0.0 if value == 0.0 else None,
                              theta, nu)
    if nu < w_lo or nu > w_hi:
        return MetaRateResult(math.inf, None, theta, nu)

    alpha_max = math.inf if math.isfinite(w_hi) else 0.0

    def t_mean(alpha):
        if alpha == 0.0:
            return math.exp(model.log_mgf(theta))
        _, t, _ = _moments(model, theta, alpha)
        return t

    # boundary of the finite-M domain: nu at or above E W decays at rate 0
    if alpha_max == 0.0 and t_mean(0.0) <= nu:
        return MetaRateResult(0.0, 0.0, theta, nu)

    lo, hi = -1.0, min(1.0, alpha_max)
    while t_mean(lo) > nu and lo > -_ALPHA_CAP:
        lo *= 2.0
    if hi == 0.0:
        pass
    else:
        while t_mean(hi) < nu and hi < _ALPHA_CAP:
            hi = min(hi * 2.0, _ALPHA_CAP if math.isinf(alpha_max)
                     else alpha_max)
            if hi == alpha_max and math.isfinite(alpha_max):
                break

    f_lo = t_mean(lo) - nu
    if f_lo > 0:
        # saturated toward the essential infimum
        m_val, _, _ = _moments(model, theta, lo)
        value = lo * nu - m_val
        return MetaRateResult(max(value, 0.0), lo, theta, nu)
    f_hi = t_mean(hi) - nu
    if f_hi < 0:
        m_val, _, _ = _moments(model, theta, hi)
        value = hi * nu - m_val
        return MetaRateResult(max(value, 0.0), hi, theta, nu)

    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = t_mean(mid) - nu
        if fm > 0:
            hi = mid
        else:
            lo = mid
        if abs(fm) <= 1e-11 * max(1.0, nu) and hi - lo <= 1e-13 * max(
                1.0, abs(mid)):
            break
    alpha_star = 0.5 * (lo + hi)
    m_val, _, _ = _moments(model, theta, alpha_star)
    value = alpha_star * nu - m_val
    return MetaRateResult(max(value, 0.0), alpha_star, theta, nu)


def inf_meta_rate(model, a: float):
    """inf over theta of J_theta(e^{-a}) for a above I(0).

    Returns (value, theta_star). This is the decay rate of the upward error
    P(I_m(0) >= a). Search is a coarse grid over [-64, 64] refined by
    golden section.
    """
    i0 = rate_function(model, 0.0).value
    if not a > i0:
        raise RegimeError(
            f"inf_meta_rate needs a > I(0) = {i0:.6g}; for a below I(0) "
            "use sup_meta_rate_on_theta_a")
    nu = math.exp(-a)

    def objective(theta):
        return meta_rate(model, theta, nu).value

    theta_star, value = grid_then_golden(objective, -_THETA_BRACKET,
                                         _THETA_BRACKET, n_grid=257,
                                         tol=1e-7)
    return value, theta_star


def _lambda_minimizer(model):
    d_lo, d_hi = model.theta_domain()
    lo = -1.0 if math.isinf(d_lo) else 0.5 * d_lo
    while model.dlog_mgf(lo) > 0:
        nxt = lo * 2.0 if math.isinf(d_lo) else 0.5 * (lo + d_lo)
        if nxt == lo or abs(nxt) > _ALPHA_CAP:
            break
        lo = nxt
    hi = 1.0 if math.isinf(d_hi) else d_hi
    if not math.isfinite(model.log_mgf(hi)):
        hi = 0.5 * d_hi if d_hi != 0.0 else -1e-8
    while model.dlog_mgf(hi) < 0:
        nxt = hi * 2.0 if math.isinf(d_hi) else 0.5 * (hi + d_hi)
        if nxt == hi or abs(nxt) > _ALPHA_CAP:
            break
        hi = nxt
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if model.dlog_mgf(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-13 * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


def _theta_a_interval(model, a):
    """[theta_lo, theta_hi] where Lambda <= -a, for 0 < a < I(0)."""
    theta_m = _lambda_minimizer(model)

    def lam(t):
        return model.log_mgf(t)

    # left endpoint: Lambda(0) = 0 > -a >= Lambda(theta_m)
    lo, hi = min(0.0, theta_m), theta_m
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if lam(mid) <= -a:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-10 * max(1.0, abs(mid)):
            break
    left = hi

    d_lo, d_hi = model.theta_domain()
    hi = theta_m
    step = max(abs(theta_m), 0.5)
    probe = theta_m + step
    for _ in range(200):
        if math.isfinite(d_hi):
            probe = min(probe, 0.5 * (hi + d_hi) if not math.isfinite(
                model.log_mgf(d_hi)) else d_hi)
        if lam(probe) > -a:
            break
        hi = probe
        step *= 2.0
        probe = theta_m + step
        if probe > _THETA_BRACKET * 4:
            probe = _THETA_BRACKET * 4
            break
    lo2, hi2 = hi, probe
    for _ in range(200):
        mid = 0.5 * (lo2 + hi2)
        if lam(mid) <= -a:
            lo2 = mid
        else:
            hi2 = mid
        if hi2 - lo2 <= 1e-10 * max(1.0, abs(mid)):
            break
    right = lo2
    return left, right


def sup_meta_rate_on_theta_a(model, a: float):
    """sup of J_theta(e^{-a}) over Theta_a = {Lambda <= -a}, 0 < a < I(0).

    Returns (value, theta_star, (theta_lo, theta_hi)). At the interval
    endpoints Lambda = -a makes the level equal E W and the rate vanish, so
    any positive supremum is interior; a heavy upper tail of W forces the
    supremum to 0 everywhere on the interval. When an interior positive
    maximum exists the first-order residual E[X W exp(alpha* W)] is checked
    and a failure emits a warning rather than an exception.
    """
    i0 = rate_function(model, 0.0).value
    if not 0.0 < a < i0:
        raise RegimeError(
            f"sup_meta_rate_on_theta_a needs 0 < a < I(0) = {i0:.6g}")
    if math.isinf(i0):
        raise RegimeError("degenerate model: I(0) is infinite")
    left, right = _theta_a_interval(model, a)
    nu = math.exp(-a)

    results = {}

    def objective(theta):
        res = meta_rate(model, theta, nu)
        results[theta] = res
        return -res.value

    theta_star, neg = grid_then_golden(objective, left, right, n_grid=129,
                                       tol=1e-8)
    value = -neg
    res = results[theta_star]
    interior = (left + 1e-6 < theta_star < right - 1e-6
                and res.alpha_star is not None and value > 1e-12
                and abs(res.alpha_star) > 1e-9)
    if interior:
        _, t_mean, xw = _moments(model, theta_star, res.alpha_star,
                                 want_xw=True)
        scale = max(abs(t_mean), 1.0)
        if abs(xw) > 1e-6 * scale:
            warnings.warn(
                "first-order residual %.3g at the reported maximizer; "
                "possible multiple roots" % xw, RuntimeWarning)
    return value, theta_star, (left, right)


def _neg_family_moments(model, theta, alpha):
    """Moments of the negated tilt family exp(-alpha W), with X-weighting."""
    m_val, t_mean, xw = _moments(model, theta, -alpha, want_xw=True)
    return m_val, t_mean, xw


def two_phase_exponent(model, c1: float, c2: float) -> TwoPhaseExponent:
    """Optimal failure exponent of the two-phase budget split.

    Minimizes phi(b) = c2 I(0) / b + inf_theta J_theta(e^{-b}) over the
    phase-1 level b. A damped Newton iteration on the stationarity system

        e^{-g} = E[W e^{-a W}] / E[e^{-a W}]      (level condition)
        E[X W e^{-a W}] = 0                       (theta stationarity)
        a e^{-g} = c2 I(0) / g^2                  (outer stationarity)

    (written in the negated-alpha family) is tried first from
    (g, theta, a) = (2 I(0), Lambda-minimizer, 1); if it fails to converge
    the outer one-dimensional minimization over b is used instead. Both
    failing raises NumericalError with the best iterate attached.
    """
    if c1 <= 0 or c2 <= 0:
        raise ValueError("c1 and c2 must be positive")
    if model.mean() >= 0:
        raise RegimeError("two-phase exponent needs a negative-mean model")
    i0 = rate_function(model, 0.0).value
    if not math.isfinite(i0) or i0 <= 0:
        raise RegimeError("degenerate model: I(0) must be finite positive")

    newton = _two_phase_newton(model, c2, i0)
    if newton is not None:
        gamma, theta, alpha = newton
        m_val, _, _ = _neg_family_moments(model, theta, alpha)
        value = -alpha * math.exp(-gamma) - m_val
        exponent = c2 * i0 / gamma + value
        return TwoPhaseExponent(exponent, gamma, theta, alpha, c1, c2)

    # fallback: outer golden-section over the level b
    def phi(b):
        val, _ = inf_meta_rate(model, b)
        return c2 * i0 / b + val

    lo = i0 * (1.0 + 1e-7) + 1e-300
    hi = max(20.0 * i0, 0.5)
    for _ in range(60):
        if phi(hi) > phi(0.5 * hi) or hi > 1e3:
            break
        hi *= 2.0
    b_star, exponent = grid_then_golden(phi, lo, hi, n_grid=65, tol=1e-9)
    val, theta_star = inf_meta_rate(model, b_star)
    res = meta_rate(model, theta_star, math.exp(-b_star))
    if res.alpha_star is None or not math.isfinite(exponent):
        raise NumericalError("two-phase exponent failed to converge",
                             best=(b_star, theta_star, res.alpha_star))
    return TwoPhaseExponent(exponent, b_star, theta_star,
                            -res.alpha_star, c1, c2)


def _two_phase_newton(model, c2, i0, max_iter=500):
    def residuals(v):
        g, th, al = v
        if g <= 0 or al <= 0:
            return None
        m_val, t_mean, xw = _neg_family_moments(model, th, al)
        if not math.isfinite(m_val):
            return None
        return np.array([
            t_mean - math.exp(-g),
            xw,
            al * math.exp(-g) - c2 * i0 / (g * g),
        ])

    v = np.array([2.0 * i0, _lambda_minimizer(model), 1.0])
    r = residuals(v)
    if r is None:
        return None
    for _ in range(max_iter):
        norm = float(np.max(np.abs(r)))
        if norm <= 1e-11:
            return tuple(v)
        jac = np.empty((3, 3))
        for j in range(3):
            h = 1e-7 * max(1.0, abs(v[j]))
            vp = v.copy()
            vp[j] += h
            rp = residuals(vp)
            if rp is None:
                return None
            jac[:, j] = (rp - r) / h
        try:
            step = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            return None
        t = 1.0
        for _ in range(50):
            cand = v + t * step
            rc = residuals(cand)
            if rc is not None and float(np.max(np.abs(rc))) < norm:
                v, r = cand, rc
                break
            t *= 0.5
        else:
            return None
    return None


def _log_j(beta, s):
    """log of J(beta, s) = int_1^inf e^{-beta z} z^{-s} dz for beta > 0.

    The integrand peaks at z = 1 where it decays at rate beta + s;
    substituting z = 1 + t/(beta + s) rescales that rate to exactly 1, so
    the quadrature sees an O(1) boundary layer whether beta is 1e-8 or
    1e8. The exp(-beta) prefactor is kept in log space.
    """
    kappa = beta + s

    def log_f(t):
        return -(beta / kappa) * t - s * math.log1p(t / kappa)

    head, _ = integrate.quad(lambda t: math.exp(log_f(t)), 0.0, 20.0,
                             limit=200)

    # tail mass can sit out at t ~ kappa/beta when s < 1; integrating in
    # v = log t keeps that reachable in O(log(kappa/beta)) panel widths
    def g(v):
        return log_f(math.exp(v)) + v if v < 700.0 else -math.inf

    v_lo = math.log(20.0)
    v, peak = v_lo, g(v_lo)
    while True:
        v += 2.0
        gv = g(v)
        peak = max(peak, gv)
        if gv < peak - 60.0 or v > 750.0:
            break
    tail_q, _ = integrate.quad(lambda vv: math.exp(g(vv) - peak), v_lo, v,
                               limit=200)
    log_tail = peak + math.log(tail_q) if tail_q > 0 else -math.inf
    total = float(np.logaddexp(math.log(head), log_tail))
    return -beta - math.log(kappa) + total


def _se_certificate_objective(theta_hat, model, c1):
    """J_{-theta_hat}(e^{-1/c1}) for the upper-bounded exponential-tail
    model, through the z = exp(theta_hat Y) substitution. Returns
    (value, alpha_star) with alpha_star multiplying z in the integrals.

    The root is solved to ~1e-7 in log alpha only: the reported value is
    the Legendre transform evaluated at its own stationary point, so the
    error it inherits is second order.
    """
    lam, k = model.lam, model.K
    target = math.exp(theta_hat * k - 1.0 / c1)
    if target <= 1.0:
        return math.inf, None
    s = lam / theta_hat

    def h(log_beta):
        beta = math.exp(log_beta)
        return _log_j(beta, s) - _log_j(beta, s + 1.0) - math.log(target)

    # the tilted z-mean decreases in beta and diverges as beta -> 0 when
    # s <= 1 (infinite-mean tail), so a root always exists; for small s it
    # can sit many orders below 1, hence the downward expansion
    lo = math.log(1e-8)
    while h(lo) <= 0.0 and lo > -200.0:
        lo -= 8.0
    hi = lo + 2.0
    while h(hi) > 0.0:
        hi += 2.0
        if hi > 60.0:
            return math.inf, None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = h(mid)
        if fm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-7:
            break
    beta = math.exp(0.5 * (lo + hi))
    # J_theta value at the root: -beta target - log( s J(beta, s+1) )
    value = -beta * target - math.log(s) - _log_j(beta, s + 1.0)
    return max(value, 0.0), beta


def sequential_failure_certificate(model, c1: float):
    """Certificate that the round-1 stopping proxy under-controls errors.

    Minimizes J_{-theta}(e^{-1/c1}) over tilts theta > 0 (the value reported
    is the decay rate of the probability that the rate estimate crosses the
    stopping threshold while the sign decision is wrong). certified = True
    when the minimum is strictly below 1/c1, which makes the ratio of the
    false-selection probability to its target delta blow up as delta -> 0.

    Returns (theta, alpha_star, meta_rate_value, certified). For the
    shifted-exponential model the residual equation in the substituted
    variable z is solved directly and alpha_star is that equation's root;
    other models go through the generic meta-rate evaluator (alpha_star is
    then the maximizer of the defining sup).
    """
    if c1 <= 0:
        raise ValueError("c1 must be positive")
    if model.mean() >= 0:
        raise RegimeError("certificate needs a negative-mean model")
    i0 = rate_function(model, 0.0).value
    if not i0 < 1.0 / c1:
        raise RegimeError(
            f"certificate regime needs I(0) = {i0:.6g} < 1/c1 = "
            f"{1.0 / c1:.6g}")

    is_se = isinstance(model, ShiftedExponential)
    if is_se:
        lo = max(1.0 / (c1 * model.K), 0.0) + 1e-6 if model.K > 0 else 1e-6

        def objective(theta_hat):
            return _se_certificate_objective(theta_hat, model, c1)[0]
    else:
        lo = 1e-6
        nu = math.exp(-1.0 / c1)

        def objective(theta_hat):
            return meta_rate(model, -theta_hat, nu).value

    theta_star, value = grid_then_golden(objective, lo, _THETA_BRACKET,
                                         n_grid=129, tol=1e-8)
    if is_se:
        value, alpha_star = _se_certificate_objective(theta_star, model, c1)
    else:
        res = meta_rate(model, -theta_star, math.exp(-1.0 / c1))
        value, alpha_star = res.value, res.alpha_star
    certified = value < 1.0 / c1 - 1e-9
    return theta_star, alpha_star, value, certified
