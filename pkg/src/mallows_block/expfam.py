"""One-parameter exponential-family toolkit.

A family is described by its log-partition function and the first two
derivatives; the derivatives are the mean and variance of the sufficient
statistic.  On top of that this module provides the closed-form KL
divergence between two members, the Chernoff-style tail bound it implies,
and monotone inversion of the mean map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = ["OneParamFamily", "kl_closed_form", "chernoff_tail_bound", "invert_mean"]

#: Bisection stops once the bracket is this narrow (in natural-parameter units).
INVERSION_TOL = 1e-9
_MAX_BISECTIONS = 200


@dataclass(frozen=True)
class OneParamFamily:
    """A single-parameter exponential family seen through its log-partition.

    ``alpha`` is the log-partition as a function of the natural parameter;
    ``alpha_dot`` and ``alpha_ddot`` are its first two derivatives, i.e. the
    mean and variance of the sufficient statistic.  ``domain`` is the closed
    interval of admissible natural parameters (infinite ends allowed).
    """

    alpha: Callable[[float], float]
    alpha_dot: Callable[[float], float]
    alpha_ddot: Callable[[float], float]
    domain: tuple[float, float] = (-math.inf, math.inf)

    def contains(self, theta: float) -> bool:
        lo, hi = self.domain
        return lo <= theta <= hi

    def require(self, theta: float, name: str = "theta") -> float:
        if math.isnan(theta) or not self.contains(theta):
            raise ValueError(f"{name} = {theta} outside the family domain {self.domain}")
        return theta


def kl_closed_form(family: OneParamFamily, theta_a: float, theta_b: float) -> float:
    """KL divergence from the ``theta_a`` member to the ``theta_b`` member.

    Equals ``(theta_a - theta_b) * alpha_dot(theta_a) + alpha(theta_b)
    - alpha(theta_a)``: the first argument's parameter multiplies its own
    mean.  Always nonnegative by convexity of the log-partition.
    """
    family.require(theta_a, "theta_a")
    family.require(theta_b, "theta_b")
    if theta_a == theta_b:
        return 0.0
    gap = theta_a - theta_b
    mean_a = family.alpha_dot(theta_a)
    # theta * alpha_dot(theta) -> 0 as theta -> -inf for families whose mean
    # decays exponentially (phi = e^theta parameterizations), so an infinite
    # endpoint contributes nothing beyond the partition terms.
    cross = 0.0 if (math.isinf(gap) and mean_a == 0.0) else gap * mean_a
    value = cross + family.alpha(theta_b) - family.alpha(theta_a)
    return max(0.0, value)


def chernoff_tail_bound(
    family: OneParamFamily, theta: float, theta_prime: float, n: int
) -> float:
    """Bound on the probability that an n-sample mean of the sufficient
    statistic, drawn under ``theta``, lands on the ``theta_prime`` side of
    the ``theta_prime`` mean.

    The event is ``mean * (theta' - theta) >= alpha_dot(theta') * (theta' -
    theta)`` and the bound is ``exp(-n * KL(theta' || theta))``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    return math.exp(-n * kl_closed_form(family, theta_prime, theta))


def invert_mean(
    family: OneParamFamily, target: float, bracket: tuple[float, float]
) -> float:
    """Solve ``alpha_dot(theta) = target`` for theta within ``bracket``.

    Requires ``alpha_dot`` nondecreasing on the bracket.  Targets at or
    beyond the bracket's mean range are clamped to the corresponding end;
    interior targets are bisected to a bracket width of ``INVERSION_TOL``.
    """
    lo, hi = bracket
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"bracket ({lo}, {hi}) must be a finite, nonempty interval")
    family.require(lo, "bracket low")
    family.require(hi, "bracket high")
    if target <= family.alpha_dot(lo):
        return lo
    if target >= family.alpha_dot(hi):
        return hi
    for _ in range(_MAX_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if family.alpha_dot(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= INVERSION_TOL:
            break
    return 0.5 * (lo + hi)
