"""Empirical log-MGF and plug-in rate estimation.

For a batch (X_1, ..., X_m) the empirical log-MGF is

    L_m(theta) = log( (1/m) sum_i exp(theta X_i) ),

a convex function with L_m(0) = 0. The plug-in estimate of the decay rate
of P(mean <= 0) for a negative-mean population is

    I_m(0) = -inf_theta L_m(theta),

and the rate at a general point x is the same quantity for the shifted
batch (X_i - x). The infimum is found by bisecting the strictly increasing
derivative L_m'(theta); when every sample sits strictly on one side of zero
the infimum is -inf and the estimate is +infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_THETA_CAP = 2.0 ** 10


@dataclass(frozen=True)
class RateEstimate:
    """Value of a rate function together with optimizer diagnostics.

    status is one of "interior" (finite optimum located), "diverges-left" /
    "diverges-right" (the defining infimum runs away to -inf as theta goes
    to -inf / +inf, value is +infinity), or "at-mean" (the evaluation point
    is the mean and the rate is exactly zero). theta_star is None whenever
    value is +infinity.
    """

    value: float
    theta_star: float | None
    status: str
    iterations: int = 0


def _values(batch):
    vals = getattr(batch, "values", batch)
    arr = np.asarray(vals, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("batch must be a nonempty 1-D collection of reals")
    return arr


def empirical_log_mgf(batch, theta: float) -> float:
    """log of the empirical mean of exp(theta X), computed with a max shift.

    The shift makes the result exact up to rounding for |theta * X_i| far
    beyond the bare exp overflow threshold.
    """
    x = _values(batch)
    t = theta * x
    hi = t.max()
    return float(hi + math.log(np.exp(t - hi).mean()))


def _log_mgf_and_deriv(x: np.ndarray, theta: float):
    t = theta * x
    hi = t.max()
    w = np.exp(t - hi)
    s = w.sum()
    lmgf = hi + math.log(s / x.size)
    deriv = float((x * w).sum() / s)
    return lmgf, deriv


def estimate_rate_at_zero(batch) -> RateEstimate:
    """I_m(0) = -inf_theta L_m(theta) by bisection on L_m'.

    L_m' is strictly increasing when the batch has at least two distinct
    points, so a sign change of the derivative brackets the optimum. The
    bracket expands geometrically from [-1, 1] up to |theta| = 2^10; if the
    derivative never changes sign inside that range the infimum is either
    -inf (all samples strictly one-signed, value +infinity) or attained in
    the limit because the batch has mass exactly at zero, in which case the
    boundary value at the cap already matches the limit to double precision.
    """
    x = _values(batch)
    if np.all(x == x[0]):
        if x[0] == 0.0:
            return RateEstimate(0.0, 0.0, "at-mean", 0)
        status = "diverges-left" if x[0] > 0 else "diverges-right"
        return RateEstimate(math.inf, None, status, 0)
    if np.all(x > 0):
        return RateEstimate(math.inf, None, "diverges-left", 0)
    if np.all(x < 0):
        return RateEstimate(math.inf, None, "diverges-right", 0)

    lo, hi = -1.0, 1.0
    _, dlo = _log_mgf_and_deriv(x, lo)
    _, dhi = _log_mgf_and_deriv(x, hi)
    while dlo > 0 and lo > -_THETA_CAP:
        lo *= 2.0
        _, dlo = _log_mgf_and_deriv(x, lo)
    while dhi < 0 and hi < _THETA_CAP:
        hi *= 2.0
        _, dhi = _log_mgf_and_deriv(x, hi)

    # mass exactly at zero: derivative keeps one sign, optimum saturates
    if dlo > 0:
        lmgf, _ = _log_mgf_and_deriv(x, lo)
        return RateEstimate(max(-lmgf, 0.0), lo, "interior", 0)
    if dhi < 0:
        lmgf, _ = _log_mgf_and_deriv(x, hi)
        return RateEstimate(max(-lmgf, 0.0), hi, "interior", 0)

    tol = 1e-10 * max(1.0, float(np.abs(x).mean()))
    it = 0
    d_mid = dlo
    for it in range(1, 200):
        mid = 0.5 * (lo + hi)
        _, d_mid = _log_mgf_and_deriv(x, mid)
        if d_mid > 0:
            hi = mid
        else:
            lo = mid
        if abs(d_mid) <= tol and hi - lo <= 1e-12 * max(1.0, abs(mid)):
            break
    theta_star = 0.5 * (lo + hi)
    lmgf, _ = _log_mgf_and_deriv(x, theta_star)
    return RateEstimate(max(-lmgf, 0.0), theta_star, "interior", it)


def estimate_rate_at(batch, x: float) -> RateEstimate:
    """Rate estimate at a general point: the zero estimate of X - x."""
    vals = _values(batch)
    return estimate_rate_at_zero(vals - x)


def restricted_inf_log_mgf(batch, theta_lo: float, theta_hi: float):
    """inf of L_m over the closed interval [theta_lo, theta_hi].

    Returns (value, theta_star). Convexity puts the infimum at an endpoint
    or at the interior derivative root, whichever the derivative signs at
    the endpoints select.
    """
    if theta_lo > theta_hi:
        raise ValueError("theta_lo must not exceed theta_hi")
    x = _values(batch)
    lm_lo, d_lo = _log_mgf_and_deriv(x, theta_lo)
    if theta_lo == theta_hi:
        return float(lm_lo), theta_lo
    lm_hi, d_hi = _log_mgf_and_deriv(x, theta_hi)
    if d_lo >= 0:
        return float(lm_lo), theta_lo
    if d_hi <= 0:
        return float(lm_hi), theta_hi
    lo, hi = theta_lo, theta_hi
    tol = 1e-10 * max(1.0, float(np.abs(x).mean()))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        _, d_mid = _log_mgf_and_deriv(x, mid)
        if d_mid > 0:
            hi = mid
        else:
            lo = mid
        if abs(d_mid) <= tol and hi - lo <= 1e-12 * max(1.0, abs(mid)):
            break
    theta_star = 0.5 * (lo + hi)
    lmgf, _ = _log_mgf_and_deriv(x, theta_star)
    return float(lmgf), theta_star
