"""The truncated geometric distribution and sums of independent copies.

``TruncatedGeometric(phi, k)`` puts mass proportional to ``phi**i`` on
``i in {0, ..., k}``.  It interpolates between a point mass at 0
(``phi = 0``) and the uniform distribution on the support (``phi = 1``),
and for fixed ``k`` the family is a one-parameter exponential family in
``theta = ln(phi)``.  Sums of independent truncated geometrics with
truncations ``k`` taken from a block of ranking positions are the
sufficient statistics of the block model, so :func:`sum_family` exposes
exactly that family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .expfam import OneParamFamily
from .validation import as_generator

__all__ = ["TruncatedGeometric", "partition_sum", "natural_family", "sum_family"]

# Closed forms for the moments are 0/0 at phi = 1; inside this band we sum
# over the support instead (exact, O(k)).
_UNIFORM_BAND = 1e-6
# Below this the closed forms are used but ln(phi) is no longer a usable
# natural parameter; callers map phi = 0 to the point-mass special case.
_ZERO_CUTOFF = 1e-12


def _check_phi_k(phi: float, k: int) -> tuple[float, int]:
    phi = float(phi)
    k = int(k)
    if not 0.0 <= phi <= 1.0:
        raise ValueError(f"phi = {phi} outside [0, 1]")
    if k < 0:
        raise ValueError(f"k = {k} must be nonnegative")
    return phi, k


def _direct_sums(phi: float, ks: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Partition, mean and second moment by summation over the support."""
    top = int(ks.max())
    j = np.arange(top + 1, dtype=np.float64)
    w = phi ** j
    cw = np.cumsum(w)
    c1 = np.cumsum(j * w)
    c2 = np.cumsum(j * j * w)
    z = cw[ks]
    return z, c1[ks] / z, c2[ks] / z


def _moments_vec(phi: float, ks) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (partition, mean, variance) over truncations ``ks``."""
    ks = np.asarray(ks, dtype=np.int64)
    if phi < _ZERO_CUTOFF or (1.0 - phi) < _UNIFORM_BAND:
        z, mean, ex2 = _direct_sums(phi, ks)
        return z, mean, np.maximum(0.0, ex2 - mean * mean)
    kp1 = (ks + 1).astype(np.float64)
    top = phi ** kp1
    z = (1.0 - top) / (1.0 - phi)
    mean = phi / (1.0 - phi) - kp1 * top / (1.0 - top)
    var = phi / (1.0 - phi) ** 2 - kp1 ** 2 * top / (1.0 - top) ** 2
    return z, mean, np.maximum(0.0, var)


def partition_sum(phi: float, k: int) -> float:
    """The geometric partial sum ``1 + phi + ... + phi**k``."""
    phi, k = _check_phi_k(phi, k)
    z, _, _ = _moments_vec(phi, np.array([k]))
    return float(z[0])


@dataclass(frozen=True)
class TruncatedGeometric:
    """Distribution on ``{0, ..., k}`` with mass proportional to ``phi**i``."""

    phi: float
    k: int

    def __post_init__(self):
        phi, k = _check_phi_k(self.phi, self.k)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "k", k)

    @cached_property
    def partition(self) -> float:
        return partition_sum(self.phi, self.k)

    @cached_property
    def _pmf(self) -> np.ndarray:
        return self.phi ** np.arange(self.k + 1, dtype=np.float64) / self.partition

    @cached_property
    def _cdf(self) -> np.ndarray:
        return np.cumsum(self._pmf)

    def pmf(self, i) -> np.ndarray | float:
        """Probability of ``i``; zero outside the support."""
        i = np.asarray(i)
        inside = (i >= 0) & (i <= self.k)
        out = np.where(inside, self._pmf[np.clip(i, 0, self.k)], 0.0)
        return float(out) if out.ndim == 0 else out

    def pmf_array(self) -> np.ndarray:
        """The full probability vector over ``0..k``."""
        return self._pmf.copy()

    def mean(self) -> float:
        _, mean, _ = _moments_vec(self.phi, np.array([self.k]))
        return float(mean[0])

    def variance(self) -> float:
        _, _, var = _moments_vec(self.phi, np.array([self.k]))
        return float(var[0])

    def mad(self) -> float:
        """Mean absolute deviation around the mean, by direct summation."""
        support = np.arange(self.k + 1, dtype=np.float64)
        return float(np.sum(self._pmf * np.abs(support - self.mean())))

    def sample(self, rng=None, size=None):
        """Exact draws by inverse CDF; identical seeds give identical draws."""
        rng = as_generator(rng)
        u = rng.random(size)
        idx = np.searchsorted(self._cdf, u, side="right")
        idx = np.minimum(idx, self.k)
        return int(idx) if size is None else idx.astype(np.int64)


def natural_family(k: int) -> OneParamFamily:
    """The exponential family of ``TruncatedGeometric(e**theta, k)``, theta <= 0."""
    return sum_family([k])


def sum_family(ks) -> OneParamFamily:
    """Family of sums of independent truncated geometrics with truncations ``ks``.

    The natural parameter is ``theta = ln(phi)``, shared across summands;
    the log-partition is the sum of the per-summand log partitions, and its
    derivatives are the sum of the per-summand means and variances.
    """
    ks = np.asarray(ks, dtype=np.int64)
    if ks.ndim != 1 or ks.size == 0 or np.any(ks < 0):
        raise ValueError("ks must be a nonempty vector of nonnegative truncations")

    def alpha(theta: float) -> float:
        z, _, _ = _moments_vec(math.exp(min(theta, 0.0)), ks)
        return float(np.log(z).sum())

    def alpha_dot(theta: float) -> float:
        _, mean, _ = _moments_vec(math.exp(min(theta, 0.0)), ks)
        return float(mean.sum())

    def alpha_ddot(theta: float) -> float:
        _, _, var = _moments_vec(math.exp(min(theta, 0.0)), ks)
        return float(var.sum())

    return OneParamFamily(alpha, alpha_dot, alpha_ddot, domain=(-math.inf, 0.0))
