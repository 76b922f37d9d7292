"""Parametric predictors, their trainers, and a k-NN conditional quantile model.

Parameter layout
----------------
linear : ``(intercept, w_1, ..., w_d)``.
mlp    : ``(c, v_1..v_h, W[0,:], ..., W[h-1,:], b_1..b_h)`` for
         ``f(x) = c + v . relu(W x + b)`` with ``h`` hidden units.

Kink conventions are ``sign(0) = 0`` and ``relu'(0) = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError
from .quantiles import quantile_rank

LINEAR = "linear"
MLP = "mlp"


def n_params(kind: str, input_dim: int, width: int = 10) -> int:
    if kind == LINEAR:
        return input_dim + 1
    if kind == MLP:
        return width * (input_dim + 1) + width + 1
    raise DomainError(f"unknown model kind {kind!r}")


@dataclass(frozen=True)
class ParamModel:
    """A differentiable predictor ``f_theta``; immutable once built."""

    kind: str
    theta: np.ndarray
    input_dim: int
    width: int = 10
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).ravel()
        if self.input_dim < 0:
            raise DomainError("input_dim must be nonnegative")
        expected = n_params(self.kind, self.input_dim, self.width)
        if theta.size != expected:
            raise DomainError(
                f"{self.kind} model with input_dim={self.input_dim} needs {expected} "
                f"parameters, got {theta.size}"
            )
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    def with_theta(self, theta, **meta):
        return replace(self, theta=theta, meta={**self.meta, **meta})

    def _unpack(self):
        h, d = self.width, self.input_dim
        t = self.theta
        c = t[0]
        v = t[1 : 1 + h]
        W = t[1 + h : 1 + h + h * d].reshape(h, d)
        b = t[1 + h + h * d :]
        return c, v, W, b

    def _check(self, X):
        """Coerce to a (n, input_dim) matrix; also report whether X was one point."""
        X = np.asarray(X, dtype=float)
        single = X.ndim == 0 or (X.ndim == 1 and (self.input_dim != 1 or X.size == 1))
        if X.ndim == 0:
            X = X.reshape(1, 1)
        elif X.ndim == 1:
            X = X.reshape(1, -1) if single else X.reshape(-1, 1)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise DomainError(
                f"expected covariates of dimension {self.input_dim}, got shape {np.shape(X)}"
            )
        return X, single

    def predict(self, X):
        """``f_theta(x)``; returns a float for a single point, an array for a batch."""
        X, single = self._check(X)
        if self.kind == LINEAR:
            out = self.theta[0] + X @ self.theta[1:]
        else:
            c, v, W, b = self._unpack()
            out = c + np.maximum(X @ W.T + b, 0.0) @ v
        return float(out[0]) if single else out

    def jacobian(self, X) -> np.ndarray:
        """Rows are ``grad_theta f_theta(x_i)``."""
        X, _ = self._check(X)
        n = X.shape[0]
        if self.kind == LINEAR:
            return np.hstack([np.ones((n, 1)), X])
        c, v, W, b = self._unpack()
        pre = X @ W.T + b
        act = np.maximum(pre, 0.0)
        gate = (pre > 0).astype(float) * v  # relu'(0) = 0
        dW = (gate[:, :, None] * X[:, None, :]).reshape(n, -1)
        return np.hstack([np.ones((n, 1)), act, dW, gate])

    def subgradient(self, X, y) -> np.ndarray:
        """Subgradient of ``|y - f_theta(x)|`` in ``theta``; one row per point.

        A single point returns a flat vector.
        """
        Xm, single = self._check(X)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        r = y - np.atleast_1d(self.predict(Xm))
        G = -np.sign(r)[:, None] * self.jacobian(Xm)
        return G[0] if single else G


def init_model(kind: str, input_dim: int, *, width: int = 10, seed: int = 0, scale: float = 1.0):
    """Zeros for the linear class; He-scaled Gaussian hidden weights for the MLP."""
    if kind == LINEAR:
        return ParamModel(LINEAR, np.zeros(input_dim + 1), input_dim)
    if kind != MLP:
        raise DomainError(f"unknown model kind {kind!r}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    fan_in = max(input_dim, 1)
    W = rng.normal(0.0, scale * math.sqrt(2.0 / fan_in), size=(width, input_dim))
    b = np.zeros(width)
    v = rng.normal(0.0, scale * math.sqrt(2.0 / width), size=width)
    theta = np.concatenate([[0.0], v, W.ravel(), b])
    return ParamModel(MLP, theta, input_dim, width)


# --------------------------------------------------------------------------
# Training

LOSSES = ("least-squares", "huber", "pinball")
# the squared loss has an unbounded slope; a unit scale overflows MLP fits
DEFAULT_STEP_SCALE = {"least-squares": 0.3, "huber": 1.0, "pinball": 1.0}


@dataclass(frozen=True)
class FitConfig:
    loss: str = "least-squares"
    delta: float = 1.35  # huber threshold
    q: float = 0.5  # pinball level
    iterations: int = 1000
    step_exponent: float = 0.6
    step_scale: float | None = None  # None: DEFAULT_STEP_SCALE[loss]
    seed: int = 0
    width: int = 10

    def __post_init__(self):
        if self.loss not in LOSSES:
            raise DomainError(f"unknown loss {self.loss!r}; choose from {LOSSES}")
        if not self.delta > 0:
            raise DomainError("huber delta must be positive")
        if not 0 < self.q < 1:
            raise DomainError("pinball level must lie in (0, 1)")
        if self.iterations < 1:
            raise DomainError("iterations must be positive")
        if self.step_scale is not None and not self.step_scale > 0:
            raise DomainError("step sizes must be positive")
        if self.width < 1:
            raise DomainError("width must be positive")

    def step(self, k: int) -> float:
        scale = DEFAULT_STEP_SCALE[self.loss] if self.step_scale is None else self.step_scale
        return scale * k ** (-self.step_exponent)


def loss_values(r: np.ndarray, cfg: FitConfig) -> np.ndarray:
    if cfg.loss == "least-squares":
        return 0.5 * r**2
    if cfg.loss == "huber":
        a = np.abs(r)
        return np.where(a <= cfg.delta, 0.5 * r**2, cfg.delta * (a - 0.5 * cfg.delta))
    return np.where(r >= 0, cfg.q * r, (cfg.q - 1) * r)


def _loss_slope(r: np.ndarray, cfg: FitConfig) -> np.ndarray:
    """d loss / d r; the parameter gradient is ``-slope * grad f``."""
    if cfg.loss == "least-squares":
        return r
    if cfg.loss == "huber":
        return np.clip(r, -cfg.delta, cfg.delta)
    return np.where(r > 0, cfg.q, np.where(r < 0, cfg.q - 1, 0.0))


def empirical_loss(model: ParamModel, X, y, cfg: FitConfig) -> float:
    return float(np.mean(loss_values(np.asarray(y, float) - model.predict(X), cfg)))


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _normal_equations(X, y):
    A = _design(X)
    G = A.T @ A
    if np.linalg.matrix_rank(G) < G.shape[0]:
        return None
    return np.linalg.solve(G, A.T @ y)


def _descend(model: ParamModel, X, y, cfg: FitConfig) -> ParamModel:
    """Full-batch (sub)gradient descent with best-iterate tracking."""
    theta = model.theta.copy()
    best = empirical_loss(model, X, y, cfg)
    best_theta = theta.copy()
    for k in range(1, cfg.iterations + 1):
        current = model.with_theta(theta)
        r = y - current.predict(X)
        g = -(_loss_slope(r, cfg)[:, None] * current.jacobian(X)).mean(axis=0)
        theta = theta - cfg.step(k) * g
        value = empirical_loss(model.with_theta(theta), X, y, cfg)
        if not math.isfinite(value):
            break
        if value < best:
            best, best_theta = value, theta.copy()
    return model.with_theta(best_theta, loss=cfg.loss, objective=best)


def fit(X, y, kind: str = LINEAR, cfg: FitConfig | None = None, init: ParamModel | None = None):
    """Fit ``kind`` to ``(X, y)`` under ``cfg.loss``.

    Linear least squares is solved exactly through the normal equations and
    falls back to gradient descent when the Gram matrix is singular
    (``meta["fallback"]`` is then True). Every other combination runs
    full-batch subgradient descent with steps ``step_scale * k**-step_exponent``
    and returns the iterate with the lowest empirical loss.
    """
    cfg = cfg or FitConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] == 0 or X.shape[0] != y.size:
        raise DomainError("fit needs a nonempty sample with matching X and y")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("fit needs finite data")
    d = X.shape[1]
    if init is None:
        init = init_model(kind, d, width=cfg.width, seed=cfg.seed)
    if kind == LINEAR and cfg.loss == "least-squares":
        theta = _normal_equations(X, y)
        if theta is not None:
            return init.with_theta(theta, loss=cfg.loss, solver="normal-equations", fallback=False)
        out = _descend(init, X, y, cfg)
        return out.with_theta(out.theta, solver="gradient-descent", fallback=True)
    out = _descend(init, X, y, cfg)
    return out.with_theta(out.theta, solver="gradient-descent", fallback=False)


# --------------------------------------------------------------------------
# k-nearest-neighbour conditional quantiles


@dataclass(frozen=True)
class KnnQuantileModel:
    """Empirical ``q``-quantile (or mean, when ``q is None``) of the k nearest targets.

    Distances are Euclidean; ties are broken by training index.
    """

    X: np.ndarray
    y: np.ndarray
    k: int
    q: float | None = 0.5

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] == 0 or X.shape[0] != y.size:
            raise DomainError("k-NN model needs a nonempty training set")
        if not 1 <= self.k <= y.size:
            raise DomainError(f"k must lie in [1, {y.size}], got {self.k}")
        if self.q is not None and not 0 < self.q <= 1:
            raise DomainError("k-NN quantile level must lie in (0, 1]")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def neighbours(self, Xq, chunk: int = 256) -> np.ndarray:
        Xq = np.asarray(Xq, dtype=float)
        if Xq.ndim <= 1:
            Xq = Xq.reshape(-1, self.X.shape[1])
        if Xq.shape[1] != self.X.shape[1]:
            raise DomainError("query dimension does not match training covariates")
        out = np.empty((Xq.shape[0], self.k), dtype=np.intp)
        for start in range(0, Xq.shape[0], chunk):
            block = Xq[start : start + chunk]
            d2 = np.sum((block[:, None, :] - self.X[None, :, :]) ** 2, axis=2)
            out[start : start + chunk] = _k_smallest(d2, self.k)
        return out

    def predict(self, Xq) -> np.ndarray:
        targets = self.y[self.neighbours(Xq)]
        if self.q is None:
            return targets.mean(axis=1)
        j = quantile_rank(self.q, self.k) - 1
        return np.sort(targets, axis=1)[:, min(j, self.k - 1)]


def _k_smallest(d: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the k smallest entries per row, ties broken by column index.

    Returned in column order, not distance order.
    """
    m, n = d.shape
    if k == n:
        return np.broadcast_to(np.arange(n), (m, n)).copy()
    kth = np.partition(d, k - 1, axis=1)[:, k - 1 : k]
    less = d < kth
    need = k - less.sum(axis=1, keepdims=True)
    tie = d == kth
    take = less | (tie & (np.cumsum(tie, axis=1) <= need))
    return np.nonzero(take)[1].reshape(m, k)


def default_k(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))


def knn_quantile(X, y, q: float | None, k: int | None = None) -> KnnQuantileModel:
    y = np.asarray(y, dtype=float).ravel()
    return KnnQuantileModel(X, y, k or default_k(y.size), q)
