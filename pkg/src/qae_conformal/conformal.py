"""Split-conformal calibration and interval constructors.

Every constructor fits its ingredients on the learn split, scores the
calibration split with a nested-set score and widens (or shrinks) the base
band by the calibrated threshold ``t_hat``:

=============== ====================================== ===============================
method          score                                  interval
=============== ====================================== ===============================
split-cp        ``|y - mu(x)|``                        ``mu -+ t``
effort          ``|y - f(x)|``, f minimizes the QAE    ``f -+ t``
lw-cp           ``|y - mu(x)| / sigma(x)``             ``mu -+ sigma t``
cqr             ``max(q_lo - y, y - q_hi)``            ``[q_lo - t, q_hi + t]``
ad-effort       ``|y - f(x)| - s(x)``                  ``f -+ (s + t)``
=============== ====================================== ===============================

An interval whose lower end exceeds its upper end is empty: it has length 0
and covers nothing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .data import Dataset
from .errors import DomainError
from .models import LINEAR, FitConfig, default_k, fit, knn_quantile
from .qae import QaeConfig, minimize_qae
from .quantiles import (
    AbsoluteResidualFamily,
    LocallyWeightedFamily,
    QuantileBandFamily,
    empirical_quantile,
    quantile_rank,
)


@dataclass(frozen=True)
class CalibrationResult:
    t_hat: float
    rank: int  # ceil((n_cal + 1)(1 - alpha)); exceeds n_cal on the infinite branch
    n_cal: int
    alpha: float

    @property
    def infinite(self) -> bool:
        return self.rank > self.n_cal


def conformal_level(n_cal: int, alpha: float) -> float:
    return (1.0 - alpha) * (n_cal + 1) / n_cal


def calibrate(scores, alpha: float) -> CalibrationResult:
    """Threshold = ``ceil((n+1)(1-alpha))``-th smallest score, or ``inf``."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    scores = np.asarray(scores, dtype=float).ravel()
    if scores.size == 0:
        raise DomainError("empty calibration set")
    n = scores.size
    level = conformal_level(n, alpha)
    return CalibrationResult(empirical_quantile(scores, level), quantile_rank(level, n), n, alpha)


@dataclass(frozen=True)
class IntervalPredictor:
    method: str
    calibration: CalibrationResult
    bounds: Callable = field(repr=False)  # X -> (lower, upper)
    parts: dict = field(default_factory=dict, repr=False)

    @property
    def t_hat(self) -> float:
        return self.calibration.t_hat

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        lo, hi = self.bounds(X)
        return np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)

    def lower(self, X):
        return self.predict(X)[0]

    def upper(self, X):
        return self.predict(X)[1]

    def lengths(self, X) -> np.ndarray:
        lo, hi = self.predict(X)
        return np.maximum(hi - lo, 0.0)

    def contains(self, X, y) -> np.ndarray:
        lo, hi = self.predict(X)
        y = np.asarray(y, dtype=float).ravel()
        return (lo <= y) & (y <= hi)


@dataclass(frozen=True)
class CoverageReport:
    coverage: float
    mean_length: float
    lengths: np.ndarray = field(repr=False)


def coverage_and_length(p: IntervalPredictor, X, y) -> CoverageReport:
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise DomainError("empty test split")
    lo, hi = p.predict(X)
    lengths = np.maximum(hi - lo, 0.0)
    covered = (lo <= y) & (y <= hi)
    mean_length = math.inf if np.isinf(lengths).any() else float(lengths.mean())
    return CoverageReport(float(covered.mean()), mean_length, lengths)


# --------------------------------------------------------------------------
# Calibration of fitted ingredients


def _require_splits(data: Dataset):
    (Xl, yl), (Xc, yc) = data.learn, data.cal
    if yl.size == 0 or yc.size == 0:
        raise DomainError("learn and calibration splits must be nonempty")
    return Xl, yl, Xc, yc


def conformalize_symmetric(predict, X_cal, y_cal, alpha, method="split-cp", parts=None):
    """Interval ``predict(x) -+ t`` from absolute residuals on the calibration split."""
    family = AbsoluteResidualFamily(predict)
    cal = calibrate(family.score(X_cal, y_cal), alpha)
    t = cal.t_hat

    def bounds(X):
        return family.interval(t, X)

    return IntervalPredictor(method, cal, bounds, dict(parts or {}, predict=predict))


def conformalize_normalized(mu, sigma, X_cal, y_cal, alpha, method="lw-cp", parts=None):
    family = LocallyWeightedFamily(mu, sigma)
    cal = calibrate(family.score(X_cal, y_cal), alpha)
    t = cal.t_hat

    def bounds(X):
        return family.interval(t, X)

    return IntervalPredictor(method, cal, bounds, dict(parts or {}, mu=mu, sigma=sigma))


def conformalize_quantile_band(q_lo, q_hi, X_cal, y_cal, alpha, method="cqr", parts=None):
    family = QuantileBandFamily(q_lo, q_hi)
    cal = calibrate(family.score(X_cal, y_cal), alpha)
    t = cal.t_hat

    def bounds(X):
        return family.interval(t, X)

    return IntervalPredictor(method, cal, bounds, dict(parts or {}, q_lo=q_lo, q_hi=q_hi))


def conformalize_residual_band(f, s, X_cal, y_cal, alpha, method="ad-effort", parts=None):
    """Interval ``f -+ (s + t)`` calibrated on ``|y - f(x)| - s(x)``."""
    scores = np.abs(np.asarray(y_cal, float) - f(X_cal)) - s(X_cal)
    cal = calibrate(scores, alpha)
    t = cal.t_hat

    def bounds(X):
        c, r = f(X), s(X) + t
        return c - r, c + r

    return IntervalPredictor(method, cal, bounds, dict(parts or {}, f=f, s=s))


# --------------------------------------------------------------------------
# Constructors


def split_cp(data: Dataset, alpha=0.1, base="least-squares", kind=LINEAR, fit_cfg=None):
    """Standard split CP around a least-squares or Huber regression."""
    Xl, yl, Xc, yc = _require_splits(data)
    if base not in ("least-squares", "huber"):
        raise DomainError(f"split_cp base must be least-squares or huber, got {base!r}")
    cfg = replace(fit_cfg or FitConfig(), loss=base)
    model = fit(Xl, yl, kind, cfg)
    method = "split-cp" if base == "least-squares" else "split-cp-huber"
    return conformalize_symmetric(model.predict, Xc, yc, alpha, method, {"model": model})


def effort(data: Dataset, alpha=0.1, kind=LINEAR, qae: QaeConfig | None = None):
    """QAE-trained predictor with a symmetric conformal band."""
    Xl, yl, Xc, yc = _require_splits(data)
    cfg = replace(qae or QaeConfig(), alpha=alpha)
    model, trace = minimize_qae(Xl, yl, kind, cfg)
    return conformalize_symmetric(model.predict, Xc, yc, alpha, "effort", {"model": model, "trace": trace})


def sigma_floor(abs_residuals) -> float:
    return max(1e-6 * float(np.mean(abs_residuals)), np.finfo(float).tiny)


def locally_weighted_cp(data: Dataset, alpha=0.1, kind=LINEAR, k=None, sigma=None, fit_cfg=None):
    """LW-CP: least-squares mean, k-NN mean of absolute residuals as the scale.

    ``sigma`` overrides the fitted scale function.
    """
    Xl, yl, Xc, yc = _require_splits(data)
    model = fit(Xl, yl, kind, replace(fit_cfg or FitConfig(), loss="least-squares"))
    mu = model.predict
    parts = {"model": model}
    if sigma is None:
        resid = np.abs(yl - mu(Xl))
        knn = knn_quantile(Xl, resid, None, k or default_k(yl.size))
        floor = sigma_floor(resid)

        def sigma(X):
            return np.maximum(knn.predict(X), floor)

        parts["sigma_model"] = knn
    return conformalize_normalized(mu, sigma, Xc, yc, alpha, "lw-cp", parts)


def cqr(data: Dataset, alpha=0.1, k=None, q_lo=None, q_hi=None):
    """Conformalized quantile regression on k-NN conditional quantiles.

    ``q_lo``/``q_hi`` override the fitted quantile functions.
    """
    Xl, yl, Xc, yc = _require_splits(data)
    parts = {}
    if q_lo is None or q_hi is None:
        kk = k or default_k(yl.size)
        lo_model = knn_quantile(Xl, yl, alpha / 2, kk)
        hi_model = knn_quantile(Xl, yl, 1 - alpha / 2, kk)
        q_lo = q_lo or lo_model.predict
        q_hi = q_hi or hi_model.predict
        parts.update(lo_model=lo_model, hi_model=hi_model)
    return conformalize_quantile_band(q_lo, q_hi, Xc, yc, alpha, "cqr", parts)


def ad_effort(
    data: Dataset,
    alpha=0.1,
    kind=LINEAR,
    qae: QaeConfig | None = None,
    k=None,
    s_hat=None,
    sub_split=False,
):
    """QAE-trained predictor plus a k-NN (1 - alpha)-quantile of its absolute residuals.

    By default both ingredients are learned on the whole learn split; with
    ``sub_split`` the first half trains the predictor and the second half
    the residual quantile. ``s_hat`` overrides the residual quantile.
    """
    Xl, yl, Xc, yc = _require_splits(data)
    cfg = replace(qae or QaeConfig(), alpha=alpha)
    Xf, yf, Xs, ys = Xl, yl, Xl, yl
    if sub_split:
        if yl.size < 2:
            raise DomainError("sub-splitting needs at least two learn points")
        h = yl.size // 2
        Xf, yf, Xs, ys = Xl[:h], yl[:h], Xl[h:], yl[h:]
    model, trace = minimize_qae(Xf, yf, kind, cfg)
    f = model.predict
    parts = {"model": model, "trace": trace}
    if s_hat is None:
        s_model = knn_quantile(Xs, np.abs(ys - f(Xs)), 1 - alpha, k or default_k(ys.size))
        s_hat = s_model.predict
        parts["s_model"] = s_model
    return conformalize_residual_band(f, s_hat, Xc, yc, alpha, "ad-effort", parts)


METHODS = {
    "split-cp": lambda d, o: split_cp(d, o["alpha"], "least-squares", o["kind"], o["fit_cfg"]),
    "split-cp-huber": lambda d, o: split_cp(d, o["alpha"], "huber", o["kind"], o["fit_cfg"]),
    "effort": lambda d, o: effort(d, o["alpha"], o["kind"], o["qae"]),
    "lw-cp": lambda d, o: locally_weighted_cp(d, o["alpha"], o["kind"], o["k"], fit_cfg=o["fit_cfg"]),
    "cqr": lambda d, o: cqr(d, o["alpha"], o["k"]),
    "ad-effort": lambda d, o: ad_effort(d, o["alpha"], o["kind"], o["qae"], o["k"], sub_split=o["sub_split"]),
}


def build(method: str, data: Dataset, alpha=0.1, kind=LINEAR, qae=None, fit_cfg=None, k=None, sub_split=False):
    """Dispatch by method name (see ``METHODS``)."""
    try:
        ctor = METHODS[method]
    except KeyError:
        raise DomainError(f"unknown method {method!r}; choose from {sorted(METHODS)}") from None
    opts = dict(alpha=alpha, kind=kind, qae=qae, fit_cfg=fit_cfg, k=k, sub_split=sub_split)
    return ctor(data, opts)
