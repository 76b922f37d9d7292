"""Closed-form concentration terms and excess-length bounds for split CP.

All functions are plain arithmetic. Each bound checks the hypotheses it
needs and raises :class:`HypothesisError` naming the failed inequality
instead of returning a meaningless number.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, HypothesisError

# Names used in error messages and by the CLI.
CAL_HYPOTHESIS = "(1-α)/n_c + √(ln(2/δ)/(2n_c)) ≤ r"
PHI_HYPOTHESIS = "φ(𝓕,δ,n_ℓ) ≤ r"
NESTED_HYPOTHESIS = "(1-α)/n_c + √(ln(1/δ)/(2n_c)) ≤ r"
JOINT_CAL_HYPOTHESIS = "1/(n_c+1) + √(ln(1/δ)/(n_c+1)) ≤ r"
JOINT_PHI_HYPOTHESIS = "φ(𝓕,𝓢,δ,n_ℓ) ≤ r"


@dataclass(frozen=True)
class HolderParams:
    """Local Hölder regularity of the score quantile: ``|Q(u) - Q(v)| ≤ L|u - v|^gamma`` for ``|u - v| ≤ r``.

    ``L = 0`` is accepted as the degenerate case with no slack.
    """

    L: float = 1.0
    gamma: float = 1.0
    r: float = 1.0

    def __post_init__(self):
        if not self.L >= 0:
            raise DomainError(f"L must be nonnegative, got {self.L}")
        if not 0 < self.gamma <= 1:
            raise DomainError(f"gamma must lie in (0, 1], got {self.gamma}")
        if not 0 < self.r <= 1:
            raise DomainError(f"r must lie in (0, 1], got {self.r}")


@dataclass(frozen=True)
class Complexity:
    """Exactly one of a finite class size, a VC dimension or a Rademacher complexity."""

    finite_class: int | None = None
    vc: int | None = None
    rademacher: float | None = None

    def __post_init__(self):
        given = [v is not None for v in (self.finite_class, self.vc, self.rademacher)]
        if sum(given) != 1:
            raise DomainError("give exactly one of finite_class, vc, rademacher")
        if self.finite_class is not None and self.finite_class < 1:
            raise DomainError("finite class size must be a positive integer")
        if self.vc is not None and self.vc < 1:
            raise DomainError("VC dimension must be a positive integer")
        if self.rademacher is not None and not self.rademacher >= 0:
            raise DomainError("Rademacher complexity must be nonnegative")


def _check_n(n, name="n"):
    if int(n) != n or n < 1:
        raise DomainError(f"{name} must be a positive integer, got {n}")


def _check_delta(delta):
    if not 0 < delta < 1:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")


def _check_alpha(alpha):
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")


def dkw_epsilon(n: int, delta: float) -> float:
    """Width ``√(ln(2/δ)/(2n))`` of the DKW band at confidence ``1 - δ``."""
    _check_n(n)
    _check_delta(delta)
    return math.sqrt(math.log(2.0 / delta) / (2.0 * n))


@dataclass(frozen=True)
class OracleLevel:
    level: float
    integer_rank: bool  # (n_c + 1)(1 - α) is an integer: the result's hypothesis fails
    saturated: bool  # level reached 1 and was capped


def conservative_oracle_level(n_cal: int, alpha: float, delta: float) -> OracleLevel:
    """Coverage ``1-α + (1-α)/n_c + √(ln(2/δ)/(2n_c))`` of the oracle the calibrated interval undercuts."""
    _check_n(n_cal, "n_cal")
    _check_alpha(alpha)
    _check_delta(delta)
    level = 1 - alpha + (1 - alpha) / n_cal + dkw_epsilon(n_cal, delta)
    rank = (n_cal + 1) * (1 - alpha)
    integer_rank = abs(rank - round(rank)) <= 1e-9 * max(1.0, rank)
    saturated = level >= 1.0
    return OracleLevel(min(level, 1.0), integer_rank, saturated)


def _cal_term(n_cal, alpha, delta):
    return (1 - alpha) / n_cal + dkw_epsilon(n_cal, delta)


def excess_volume_bound_fixed_f(n_cal: int, alpha: float, delta: float, h: HolderParams) -> float:
    """Slack ``2L(1/n_c + √(ln(2/δ)/(2n_c)))^γ`` for a fixed predictor."""
    _check_n(n_cal, "n_cal")
    _check_alpha(alpha)
    _check_delta(delta)
    lhs = _cal_term(n_cal, alpha, delta)
    if lhs > h.r:
        raise HypothesisError(CAL_HYPOTHESIS, f"{lhs:.6g} > {h.r:.6g}")
    return 2.0 * h.L * (1.0 / n_cal + dkw_epsilon(n_cal, delta)) ** h.gamma


def phi_closed_form(c: Complexity, n: int, delta: float) -> float:
    """Uniform deviation term ``φ(𝓕, δ, n)``.

    finite class  √(ln(2|𝓕|/δ)/(2n))
    Rademacher    2 R_n + √(ln(1/δ)/(2n))
    VC dimension  √(8 VC ln(e n/VC)/n) + √(ln(1/δ)/(2n))
    """
    _check_n(n)
    _check_delta(delta)
    if c.finite_class is not None:
        return math.sqrt(math.log(2.0 * c.finite_class / delta) / (2.0 * n))
    tail = math.sqrt(math.log(1.0 / delta) / (2.0 * n))
    if c.rademacher is not None:
        return 2.0 * c.rademacher + tail
    if c.vc > n:
        raise DomainError(f"VC dimension {c.vc} exceeds n = {n}")
    return math.sqrt(8.0 * c.vc * math.log(math.e * n / c.vc) / n) + tail


@dataclass(frozen=True)
class ExcessVolume:
    total: float
    calibration: float
    learning: float

    @property
    def dominant(self) -> str:
        return "learning" if self.learning > self.calibration else "calibration"


def effort_excess_volume_bound(
    n_cal: int, n_learn: int, alpha: float, delta: float, h: HolderParams, c: Complexity
) -> ExcessVolume:
    """Slack of the QAE-trained interval over the best constant-width oracle.

    ``2L(1/n_c + √(ln(2/δ)/(2n_c)))^γ + 4L φ(𝓕,δ,n_ℓ)^γ``, split into its
    calibration and learning addends.
    """
    _check_n(n_learn, "n_learn")
    calibration = excess_volume_bound_fixed_f(n_cal, alpha, delta, h)
    phi = phi_closed_form(c, n_learn, delta)
    if phi > h.r:
        raise HypothesisError(PHI_HYPOTHESIS, f"φ = {phi:.6g} > r = {h.r:.6g}")
    learning = 4.0 * h.L * phi**h.gamma
    return ExcessVolume(calibration + learning, calibration, learning)


def nested_length_bound(a: float, b: float, n_cal: int, alpha: float, delta: float, h: HolderParams) -> float:
    """Slack ``a L ((1-α)/n_c + √(ln(1/δ)/(2n_c)))^γ`` for nested sets with mean length ``a t + b``."""
    if not a >= 0:
        raise DomainError("a must be nonnegative")
    if not b >= 0:
        raise DomainError("b must be nonnegative")
    _check_n(n_cal, "n_cal")
    _check_alpha(alpha)
    _check_delta(delta)
    term = (1 - alpha) / n_cal + math.sqrt(math.log(1.0 / delta) / (2.0 * n_cal))
    if term > h.r:
        raise HypothesisError(NESTED_HYPOTHESIS, f"{term:.6g} > {h.r:.6g}")
    return a * h.L * term**h.gamma


def joint_excess_volume_bound(psi: float, phi: float, n_cal: int, delta: float, h: HolderParams) -> float:
    """Slack ``4ψ + 2L(1/(n_c+1) + √(ln(1/δ)/(n_c+1)) + 2φ)^γ`` for jointly learned ``(f, s)``.

    ``psi`` and ``phi`` are supplied by the caller; nothing here estimates them.
    """
    if not psi >= 0 or not phi >= 0:
        raise DomainError("psi and phi must be nonnegative")
    _check_n(n_cal, "n_cal")
    _check_delta(delta)
    term = 1.0 / (n_cal + 1) + math.sqrt(math.log(1.0 / delta) / (n_cal + 1))
    if term > h.r:
        raise HypothesisError(JOINT_CAL_HYPOTHESIS, f"{term:.6g} > {h.r:.6g}")
    if phi > h.r:
        raise HypothesisError(JOINT_PHI_HYPOTHESIS, f"φ = {phi:.6g} > r = {h.r:.6g}")
    return 4.0 * psi + 2.0 * h.L * (term + 2.0 * phi) ** h.gamma
