"""Empirical and smoothed quantiles, pinball loss, nested-set scores.

Scores and losses are plain 1-d float arrays. Quantiles follow the
left-continuous inverse of the empirical CDF,
``inf{t : (1/n) #{s_i <= t} >= q}``, which is the ``ceil(q n)``-th order
statistic. Levels slightly above 1 are legal (the conformal rank rule asks
for ``(1 - alpha)(n + 1)/n``) and yield ``math.inf`` once the rank runs past
the sample.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# q*n is compared against integers with this relative slack so that levels
# built as (1-alpha)*(n+1)/n do not drift one rank up through rounding.
_RANK_RTOL = 1e-9


def _as_sample(s) -> np.ndarray:
    s = np.asarray(s, dtype=float).ravel()
    if s.size == 0:
        raise DomainError("empty sample")
    if not np.all(np.isfinite(s)):
        raise DomainError("sample contains non-finite values")
    return s


def quantile_rank(q: float, n: int) -> int:
    """1-based order-statistic index ``ceil(q n)`` used by :func:`empirical_quantile`.

    The result may exceed ``n``; callers treat that as the infinite branch.
    """
    if n < 1:
        raise DomainError("empty sample")
    if not q > 0:
        raise DomainError(f"quantile level must be positive, got {q}")
    qn = q * n
    return max(1, math.ceil(qn - _RANK_RTOL * max(1.0, qn)))


def empirical_quantile(s, q: float) -> float:
    """Return ``inf{t : F_n(t) >= q}``; ``math.inf`` when ``ceil(q n) > n``."""
    s = _as_sample(s)
    k = quantile_rank(q, s.size)
    if k > s.size:
        return math.inf
    return float(np.partition(s, k - 1)[k - 1])


def pinball_loss(u, q: float):
    """Check loss ``q u`` for ``u >= 0`` and ``(q - 1) u`` otherwise. Vectorized."""
    if not 0 < q < 1:
        raise DomainError(f"pinball level must lie in (0, 1), got {q}")
    u = np.asarray(u, dtype=float)
    out = np.where(u >= 0, q * u, (q - 1) * u)
    return float(out) if out.ndim == 0 else out


def gamma_smooth(z, epsilon: float):
    """Smoothed indicator of ``z <= 0``.

    Equal to 1 below ``-epsilon``, 0 above ``epsilon`` and the quintic
    ``15/16 (-(z/e)^5/5 + 2(z/e)^3/3 - z/e + 8/15)`` in between.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    z = np.asarray(z, dtype=float)
    u = np.clip(z / epsilon, -1.0, 1.0)
    out = (15.0 / 16.0) * (-(u**5) / 5.0 + 2.0 * u**3 / 3.0 - u + 8.0 / 15.0)
    out = np.where(u <= -1.0, 1.0, np.where(u >= 1.0, 0.0, out))  # exact saturation
    return float(out) if out.ndim == 0 else out


def gamma_smooth_derivative(z, epsilon: float):
    """Derivative of :func:`gamma_smooth`: ``-15/16 (e^2 - z^2)^2 / e^5`` on ``|z| < e``."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) < epsilon
    out = np.where(inside, -(15.0 / 16.0) * (epsilon**2 - z**2) ** 2 / epsilon**5, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SmoothingKernel:
    epsilon: float = 0.1

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise DomainError(f"epsilon must be positive and finite, got {self.epsilon}")

    def __call__(self, z):
        return gamma_smooth(z, self.epsilon)

    def derivative(self, z):
        return gamma_smooth_derivative(z, self.epsilon)


def smoothed_cdf(s, t: float, epsilon: float) -> float:
    """Mean of ``gamma_smooth(s_i - t)``: a C^2 surrogate of the empirical CDF."""
    s = _as_sample(s)
    return float(np.mean(gamma_smooth(s - t, epsilon)))


def smoothed_quantile(s, q: float, epsilon: float, tol: float = 1e-10) -> float:
    """Smallest ``t`` with ``smoothed_cdf(s, t) >= q``, located by bisection.

    The bracket ``[min(s) - epsilon, max(s) + epsilon]`` always contains the
    root because the smoothed CDF is 0 and 1 at its ends.
    """
    s = _as_sample(s)
    if not 0 < q < 1:
        raise DomainError(f"smoothed quantile level must lie in (0, 1), got {q}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    lo = float(s.min()) - epsilon
    hi = float(s.max()) + epsilon
    if smoothed_cdf(s, lo, epsilon) >= q or smoothed_cdf(s, hi, epsilon) < q:
        raise RuntimeError("smoothed quantile bracket does not straddle the level")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if smoothed_cdf(s, mid, epsilon) >= q:
            hi = mid
        else:
            lo = mid
    return hi


# Nested-set families. Each maps a threshold t to the interval C_t(x); the
# score of (x, y) is the smallest t whose set contains y.


class AbsoluteResidualFamily:
    """``C_t(x) = [mu(x) - t, mu(x) + t]``."""

    def __init__(self, mu):
        self.mu = mu

    def interval(self, t, x):
        m = self.mu(x)
        return m - t, m + t

    def score(self, x, y):
        return np.abs(np.asarray(y, dtype=float) - self.mu(x))


class LocallyWeightedFamily:
    """``C_t(x) = [mu(x) - t sigma(x), mu(x) + t sigma(x)]``, ``sigma > 0``."""

    def __init__(self, mu, sigma):
        self.mu = mu
        self.sigma = sigma

    def _sigma(self, x):
        sd = np.asarray(self.sigma(x), dtype=float)
        if np.any(sd <= 0):
            raise DomainError("locally weighted family needs sigma(x) > 0")
        return sd

    def interval(self, t, x):
        m, sd = self.mu(x), self._sigma(x)
        return m - t * sd, m + t * sd

    def score(self, x, y):
        return np.abs(np.asarray(y, dtype=float) - self.mu(x)) / self._sigma(x)


class QuantileBandFamily:
    """``C_t(x) = [q_lo(x) - t, q_hi(x) + t]``; scores may be negative."""

    def __init__(self, q_lo, q_hi):
        self.q_lo = q_lo
        self.q_hi = q_hi

    def interval(self, t, x):
        return self.q_lo(x) - t, self.q_hi(x) + t

    def score(self, x, y):
        y = np.asarray(y, dtype=float)
        return np.maximum(self.q_lo(x) - y, y - self.q_hi(x))


def nested_score(family, x, y, *, bracket=None, tol=1e-12):
    """Score ``inf{t : y in C_t(x)}`` for a monotone family of intervals.

    Families exposing ``score`` are evaluated in closed form. Otherwise the
    infimum is found by bisection on ``bracket = (t_lo, t_hi)``, which must
    satisfy ``y not in C_{t_lo}(x)`` and ``y in C_{t_hi}(x)``.
    """
    if bracket is None:
        if not hasattr(family, "score"):
            raise DomainError("a bracket is required for families without a closed form")
        out = np.asarray(family.score(x, y), dtype=float)
        return float(out) if out.ndim == 0 else out

    def contains(t):
        lo, hi = family.interval(t, x)
        return bool(lo <= y <= hi)

    t_lo, t_hi = map(float, bracket)
    if contains(t_lo) or not contains(t_hi):
        raise DomainError("bracket does not isolate the score")
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if mid <= t_lo or mid >= t_hi:
            break
        if contains(mid):
            t_hi = mid
        else:
            t_lo = mid
    return t_hi
