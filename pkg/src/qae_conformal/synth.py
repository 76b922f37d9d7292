"""Seeded synthetic regression scenarios with Gaussian and Pareto-type noise.

Random numbers come from numpy's Philox counter-based generator. A stream is
addressed by ``(seed, stream_id)`` through ``SeedSequence(seed,
spawn_key=(stream_id,))``; the learn, calibration and test splits and the
coefficient draw each own a stream, so resizing one split never changes the
others.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import DomainError

NOISE_LAWS = ("normal", "mix-normal", "pareto", "mix-pareto")
SCENARIOS = ("linear-3d", "heteroscedastic-1d", "quadratic-nn")

STREAM_THETA = 0
STREAM_LEARN = 1
STREAM_CAL = 2
STREAM_TEST = 3

def substream(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def derive_seed(seed: int, index: int) -> int:
    """A 64-bit child seed; used to give every repeat its own reproducible seed."""
    state = np.random.SeedSequence(seed, spawn_key=(index,)).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True)
class NoiseSpec:
    law: str = "normal"
    scale: float = 1.0
    pareto_shape: float = 2.0
    pareto_scale: float = 1.0
    mix_weight: float = 0.05

    def __post_init__(self):
        if self.law not in NOISE_LAWS:
            raise DomainError(f"unknown noise law {self.law!r}; choose from {NOISE_LAWS}")
        if self.scale < 0:
            raise DomainError("noise scale must be nonnegative")
        if not (self.pareto_shape > 0 and self.pareto_scale > 0):
            raise DomainError("pareto shape and scale must be positive")
        if not 0 <= self.mix_weight <= 1:
            raise DomainError("mixture weight must lie in [0, 1]")

    @property
    def mean(self) -> float:
        """Analytic mean of the unscaled law (inf when it does not exist)."""
        a, s, w = self.pareto_shape, self.pareto_scale, self.mix_weight
        pareto_mean = a * s / (a - 1) if a > 1 else math.inf
        return {
            "normal": 0.0,
            "mix-normal": (1 - w) * 0.0 + w * 2.0,
            "pareto": pareto_mean,
            "mix-pareto": (1 - w) * pareto_mean + w * (-20.0),
        }[self.law]


def _pareto(rng, size, shape, scale):
    u = 1.0 - rng.random(size)  # (0, 1]
    return scale * u ** (-1.0 / shape)


def sample_noise(spec: NoiseSpec, rng: np.random.Generator, size=None):
    """Draw from the noise law; ``size=None`` returns one float.

    normal      N(0, 1)
    mix-normal  (1-w) N(0, 1) + w N(2, 1)
    pareto      Pareto(shape, scale) by inverse CDF, ``scale * U**(-1/shape)``
    mix-pareto  (1-w) Pareto(shape, scale) + w N(-20, 1)
    """
    n = 1 if size is None else size
    if spec.law == "normal":
        out = rng.standard_normal(n)
    elif spec.law == "pareto":
        out = _pareto(rng, n, spec.pareto_shape, spec.pareto_scale)
    else:
        pick = rng.random(n) < spec.mix_weight
        if spec.law == "mix-normal":
            base = rng.standard_normal(n)
            extra = 2.0 + rng.standard_normal(n)
        else:
            base = _pareto(rng, n, spec.pareto_shape, spec.pareto_scale)
            extra = -20.0 + rng.standard_normal(n)
        out = np.where(pick, extra, base)
    out = spec.scale * out
    return float(out[0]) if size is None else out


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "linear-3d"
    noise: NoiseSpec = NoiseSpec()
    n_lrn: int = 1000
    n_cal: int = 1000
    n_test: int = 1000
    seed: int = 0
    theta_seed: int | None = None  # None: draw coefficients from this repeat's seed
    center_noise: bool = False

    def __post_init__(self):
        if self.kind not in SCENARIOS:
            raise DomainError(f"unknown scenario {self.kind!r}; choose from {SCENARIOS}")
        if min(self.n_lrn, self.n_cal, self.n_test) < 1:
            raise DomainError("split sizes must be at least 1")


def _split_draw(spec: ScenarioSpec, rng, n, theta):
    noise = sample_noise(spec.noise, rng, n)
    if spec.center_noise and math.isfinite(spec.noise.mean):
        noise = noise - spec.noise.scale * spec.noise.mean
    if spec.kind == "linear-3d":
        X = rng.standard_normal((n, 3))
        return X, X @ theta + noise
    x = rng.standard_normal(n)
    if spec.kind == "heteroscedastic-1d":
        return x.reshape(-1, 1), x + np.abs(x) * noise
    return x.reshape(-1, 1), x**2 + noise


def generate(spec: ScenarioSpec) -> Dataset:
    """Draw the learn/calibration/test splits of one repeat."""
    theta = None
    if spec.kind == "linear-3d":
        tseed = spec.seed if spec.theta_seed is None else spec.theta_seed
        theta = substream(tseed, STREAM_THETA).uniform(0.0, 1.0, size=3)
    parts = []
    for stream, n in ((STREAM_LEARN, spec.n_lrn), (STREAM_CAL, spec.n_cal), (STREAM_TEST, spec.n_test)):
        parts.append(_split_draw(spec, substream(spec.seed, stream), n, theta))
    return Dataset.from_parts(*parts, theta=theta)
