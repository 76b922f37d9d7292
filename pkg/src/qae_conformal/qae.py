"""Minimize the empirical (1 - alpha)-quantile of absolute errors.

The quantile of the losses ``l_i = |y_i - f_theta(x_i)|`` is replaced by a
smoothed quantile whose gradient, by the implicit function theorem, is a
weighted average of the per-sample loss subgradients::

    grad = sum_i w_i grad l_i / sum_i w_i,   w_i = Gamma'(l_i - A)

where ``A`` is the current quantile of the losses. Iterates follow
``theta <- theta - eta_k * grad`` with ``eta_k = step_scale * k**-step_exponent``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, OptimizationError
from .models import LINEAR, FitConfig, ParamModel, fit, init_model
from .quantiles import empirical_quantile, gamma_smooth_derivative, smoothed_quantile

QUANTILE_MODES = ("empirical", "smoothed")
INITS = ("auto", "least-squares", "zeros", "random")

STALL_WARN_FRACTION = 0.10


@dataclass(frozen=True)
class QaeConfig:
    alpha: float = 0.1
    epsilon: float = 0.1
    n_iter: int = 1000
    step_exponent: float = 0.6
    step_scale: float = 1.0
    seed: int = 0
    quantile_mode: str = "empirical"
    init: str = "auto"
    width: int = 10

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.epsilon > 0:
            raise DomainError(f"epsilon must be positive, got {self.epsilon}")
        if self.n_iter < 1:
            raise DomainError("n_iter must be at least 1")
        if not self.step_scale >= 0:
            raise DomainError("step_scale must be nonnegative")
        if self.quantile_mode not in QUANTILE_MODES:
            raise DomainError(f"quantile_mode must be one of {QUANTILE_MODES}")
        if self.init not in INITS:
            raise DomainError(f"init must be one of {INITS}")

    @property
    def level(self) -> float:
        return 1.0 - self.alpha

    def step(self, k: int) -> float:
        return self.step_scale * k ** (-self.step_exponent)


@dataclass
class QaeTrace:
    objectives: list = field(default_factory=list)  # exact QAE at theta_1..theta_{n_iter+1}
    best_value: float = math.inf
    best_theta: np.ndarray | None = None
    best_iteration: int = 0
    last_theta: np.ndarray | None = None
    stalls: int = 0

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate(np.asarray(self.objectives))


def absolute_errors(model: ParamModel, X, y) -> np.ndarray:
    return np.abs(np.asarray(y, dtype=float) - model.predict(X))


def qae_objective(model: ParamModel, X, y, alpha: float) -> float:
    """Exact empirical (1 - alpha)-quantile of ``|y - f(x)|``."""
    return empirical_quantile(absolute_errors(model, X, y), 1.0 - alpha)


def smoothed_qae(model: ParamModel, X, y, alpha: float, epsilon: float, tol: float = 1e-10) -> float:
    return smoothed_quantile(absolute_errors(model, X, y), 1.0 - alpha, epsilon, tol=tol)


def qae_gradient(model: ParamModel, X, y, cfg: QaeConfig, *, return_weights: bool = False):
    """Gradient of the smoothed loss quantile with respect to ``theta``.

    Returns ``(grad, stalled)``; with ``return_weights`` also the normalized
    weights. ``stalled`` is True when no loss lies within ``epsilon`` of the
    anchor, in which case the gradient is zero.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    losses = absolute_errors(model, X, y)
    if cfg.quantile_mode == "smoothed":
        anchor = smoothed_quantile(losses, cfg.level, cfg.epsilon)
    else:
        anchor = empirical_quantile(losses, cfg.level)
    B = gamma_smooth_derivative(losses - anchor, cfg.epsilon)
    total = B.sum()
    if total == 0.0:
        grad = np.zeros(model.theta.size)
        return (grad, True, np.zeros_like(B)) if return_weights else (grad, True)
    w = B / total
    active = w != 0.0
    C = model.subgradient(X[active], y[active])
    grad = w[active] @ C
    return (grad, False, w) if return_weights else (grad, False)


def initial_model(X, y, kind: str, cfg: QaeConfig) -> ParamModel:
    X = np.asarray(X, dtype=float)
    d = X.shape[1]
    init = cfg.init
    if init == "auto":
        init = "least-squares" if kind == LINEAR else "random"
    if init == "zeros":
        m = init_model(kind, d, width=cfg.width, seed=cfg.seed)
        return m.with_theta(np.zeros_like(m.theta))
    if init == "random":
        return init_model(kind, d, width=cfg.width, seed=cfg.seed)
    return fit(X, y, kind, FitConfig(loss="least-squares", seed=cfg.seed, width=cfg.width))


def minimize_qae(X, y, kind: str = LINEAR, cfg: QaeConfig | None = None, init: ParamModel | None = None):
    """Run the smoothed-quantile gradient method; return ``(best_model, trace)``.

    The returned model is the iterate with the smallest exact empirical QAE;
    ``trace.last_theta`` holds the final iterate.
    """
    cfg = cfg or QaeConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] == 0 or X.shape[0] != y.size:
        raise DomainError("minimize_qae needs a nonempty learn split")
    model = init if init is not None else initial_model(X, y, kind, cfg)
    theta = model.theta.copy()
    trace = QaeTrace()

    def record(k, th):
        errors = absolute_errors(model.with_theta(th), X, y)
        if not np.all(np.isfinite(errors)):
            raise OptimizationError(k, "non-finite absolute errors; parameters diverged")
        value = empirical_quantile(errors, cfg.level)
        if not math.isfinite(value):
            raise OptimizationError(k, f"non-finite QAE objective {value}; parameters diverged")
        trace.objectives.append(value)
        if value < trace.best_value:
            trace.best_value, trace.best_theta, trace.best_iteration = value, th.copy(), k

    record(1, theta)
    for k in range(1, cfg.n_iter + 1):
        grad, stalled = qae_gradient(model.with_theta(theta), X, y, cfg)
        trace.stalls += stalled
        theta = theta - cfg.step(k) * grad
        record(k + 1, theta)
    trace.last_theta = theta
    if trace.stalls > STALL_WARN_FRACTION * cfg.n_iter:
        warnings.warn(
            f"{trace.stalls}/{cfg.n_iter} iterations had no loss within epsilon of the "
            f"quantile; consider a larger epsilon (now {cfg.epsilon})",
            RuntimeWarning,
            stacklevel=2,
        )
    best = model.with_theta(trace.best_theta, objective=trace.best_value, stalls=trace.stalls)
    return best, trace
