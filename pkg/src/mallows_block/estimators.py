"""Estimators for the block model: center ranking and spread parameters.

The center is recovered from pairwise majorities; the spread vector by
inverting each block's mean map at the empirical mean of its sufficient
statistic.  Both are exposed as plain functions and wrapped in a
scikit-learn style estimator class so the model plugs into the wider
ecosystem (``get_params``/``set_params``, cloning, pipelines).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import permutations as perms
from .expfam import invert_mean
from .model import BlockPartition, MallowsBlockModel
from .truncated_geometric import sum_family
from .validation import check_permutation, check_rank_matrix

__all__ = [
    "EstimationReport",
    "estimate_central_ranking",
    "estimate_spread",
    "estimate_full",
    "single_sample_estimate",
    "invert_block_means",
    "sample_size_guideline",
    "MallowsBlockEstimator",
]

# Spread inversion searches theta = ln(phi) over phi in [_PHI_FLOOR, 1].
_PHI_FLOOR = 1e-12
_THETA_BRACKET = (math.log(_PHI_FLOOR), 0.0)

#: Clamp / diagnostic flags attached per block by the spread estimator.
FLAG_LOWER = "lower"
FLAG_UPPER = "upper"
FLAG_UNIDENTIFIABLE = "unidentifiable"


@dataclass
class EstimationReport:
    """Everything a fit produced, plus the diagnostics around it."""

    center: np.ndarray
    spread: np.ndarray
    block_means: np.ndarray
    clamp_flags: tuple
    n_center: int
    n_spread: int
    center_provided: bool = False

    def to_dict(self) -> dict:
        return {
            "center": [int(r) for r in self.center],
            "spread": [float(p) for p in self.spread],
            "block_means": [float(r) for r in self.block_means],
            "clamp_flags": list(self.clamp_flags),
            "n_center": int(self.n_center),
            "n_spread": int(self.n_spread),
            "center_provided": bool(self.center_provided),
        }


def pairwise_win_counts(X: np.ndarray) -> np.ndarray:
    """``counts[i, j]``: in how many rankings item ``i+1`` beats item ``j+1``."""
    X = check_rank_matrix(X)
    n, m = X.shape
    counts = np.zeros((m, m), dtype=np.int64)
    rows_per_chunk = max(1, (1 << 23) // (m * m))
    for start in range(0, n, rows_per_chunk):
        chunk = X[start : start + rows_per_chunk]
        counts += (chunk[:, :, None] < chunk[:, None, :]).sum(axis=0)
    return counts


def estimate_central_ranking(X) -> np.ndarray:
    """Center estimate from pairwise majorities.

    Items are ordered by number of strict pairwise wins (ties broken by
    mean sample position, then by item index).  Whenever the strict
    majority tournament is a total order this coincides with ranking item
    ``i`` before ``j`` exactly when ``i`` beats ``j`` in more samples, and
    it always returns a valid ranking.
    """
    X = check_rank_matrix(X)
    m = X.shape[1]
    counts = pairwise_win_counts(X)
    wins = (counts > counts.T).sum(axis=1)
    mean_position = X.mean(axis=0)
    order = np.lexsort((np.arange(m), mean_position, -wins))
    ranks = np.empty(m, dtype=np.int64)
    ranks[order] = np.arange(1, m + 1)
    return ranks


def invert_block_means(block_means, partition: BlockPartition):
    """Map per-block empirical means to spread estimates with clamp flags.

    A mean at or below 0 clamps to ``phi = 0``; a mean at or above the
    uniform value (half the block's maximum statistic) clamps to
    ``phi = 1``; a block whose statistic is identically zero (the single
    position 1) is flagged unidentifiable.  Interior means are inverted by
    bisection on the block's strictly increasing mean map.
    """
    block_means = np.asarray(block_means, dtype=np.float64)
    if block_means.shape != (partition.d,):
        raise ValueError(f"expected {partition.d} block means, got shape {block_means.shape}")
    spread = np.empty(partition.d, dtype=np.float64)
    flags: list[str | None] = []
    for i in range(partition.d):
        ks = partition.truncations(i)
        max_stat = int(ks.sum())
        r = block_means[i]
        if max_stat == 0:
            spread[i] = 0.0
            flags.append(FLAG_UNIDENTIFIABLE)
        elif r <= 0.0:
            spread[i] = 0.0
            flags.append(FLAG_LOWER)
        elif r >= max_stat / 2.0:
            spread[i] = 1.0
            flags.append(FLAG_UPPER)
        else:
            theta = invert_mean(sum_family(ks), r, _THETA_BRACKET)
            spread[i] = math.exp(theta)
            flags.append(None)
    return spread, tuple(flags)


def estimate_spread(X, center, partition: BlockPartition):
    """Spread vector against a known center: ``(spread, block_means, flags)``.

    Blocks are handled independently; each estimate inverts the block's
    mean map at the empirical mean of its discordance sum.
    """
    X = check_rank_matrix(X, m=partition.m)
    center = check_permutation(center, m=partition.m, name="center")
    V = perms.discordance_matrix(X, center)
    block_means = partition.block_sums(V).mean(axis=0)
    spread, flags = invert_block_means(block_means, partition)
    return spread, block_means, flags


def estimate_full(X, partition: BlockPartition, center=None, split: bool = False) -> EstimationReport:
    """Estimate center and spread from one batch.

    With ``center`` given, ranking estimation is skipped.  ``split`` holds
    out the first half of the batch for the center and estimates the
    spread on the rest; by default the whole batch serves both stages.
    """
    X = check_rank_matrix(X, m=partition.m)
    n = X.shape[0]
    if center is not None:
        center = check_permutation(center, m=partition.m, name="center")
        center_rows, spread_rows, provided = 0, n, True
        spread_X = X
    elif split:
        if n < 2:
            raise ValueError("sample splitting needs at least two rankings")
        cut = (n + 1) // 2
        center = estimate_central_ranking(X[:cut])
        center_rows, spread_rows, provided = cut, n - cut, False
        spread_X = X[cut:]
    else:
        center = estimate_central_ranking(X)
        center_rows, spread_rows, provided = n, n, False
        spread_X = X
    spread, block_means, flags = estimate_spread(spread_X, center, partition)
    return EstimationReport(
        center=center,
        spread=spread,
        block_means=block_means,
        clamp_flags=flags,
        n_center=center_rows,
        n_spread=spread_rows,
        center_provided=provided,
    )


def single_sample_estimate(pi, center, partition: BlockPartition) -> np.ndarray:
    """Spread estimate from one ranking under a known center."""
    pi = check_permutation(pi, m=partition.m, name="pi")
    spread, _, _ = estimate_spread(pi.reshape(1, -1), center, partition)
    return spread


def sample_size_guideline(
    m: int, d: int, m_star: int, eps: float, delta: float, gamma: float
) -> dict:
    """Order-of-magnitude sample sizes the theory asks for.

    ``n_center`` covers center recovery with failure probability ``delta``
    when every spread is at most ``1 - gamma``; ``n_spread`` covers an
    l2 spread error of ``eps``.  Reporting only, never enforced.
    """
    if min(m, d, m_star) < 1 or min(eps, delta, gamma) <= 0:
        raise ValueError("m, d, m_star must be positive and eps, delta, gamma in (0, 1]")
    n_center = math.ceil(math.log(max(m, 2) / delta) / gamma)
    n_spread = math.ceil(16.0 * d * math.log(2.0 * d / delta) / (m_star * eps * eps))
    return {
        "n_center": n_center,
        "n_spread": n_spread,
        "n_total": n_center + n_spread,
    }


class MallowsBlockEstimator(BaseEstimator):
    """Scikit-learn style estimator for the block model.

    Parameters
    ----------
    blocks : sequence of sequences of int, optional
        Partition of the ranking positions ``1..m``; defaults to a single
        block (the single-parameter model).
    center : array-like, optional
        Known center ranking.  When given, fitting estimates only the
        spread parameters.
    split_samples : bool, default=False
        Hold out the first half of the batch for center estimation and
        fit the spread on the second half.

    Attributes
    ----------
    center_ : ndarray of shape (m,)
        Estimated (or provided) center ranking.
    spread_ : ndarray of shape (d,)
        Estimated spread parameters, one per block.
    report_ : EstimationReport
        Per-block means, clamp flags and stage sample counts.
    model_ : MallowsBlockModel
        The fitted model; use it for sampling and likelihoods.

    Examples
    --------
    >>> truth = MallowsBlockModel([1, 2, 3, 4, 5], 0.3)
    >>> X = truth.sample(200, random_state=0)
    >>> est = MallowsBlockEstimator().fit(X)
    >>> est.center_.tolist()
    [1, 2, 3, 4, 5]
    """

    def __init__(self, blocks=None, center=None, split_samples=False):
        self.blocks = blocks
        self.center = center
        self.split_samples = split_samples

    def fit(self, X, y=None):
        """Fit the model to an ``(n, m)`` batch of rank vectors."""
        X = check_rank_matrix(X)
        m = X.shape[1]
        partition = (
            BlockPartition.single(m) if self.blocks is None else BlockPartition(self.blocks)
        )
        if partition.m != m:
            raise ValueError(f"blocks cover {partition.m} positions but X ranks {m} items")
        report = estimate_full(
            X,
            partition,
            center=self.center,
            split=self.split_samples,
        )
        self.n_features_in_ = m
        self.partition_ = partition
        self.center_ = report.center
        self.spread_ = report.spread
        self.report_ = report
        self.model_ = MallowsBlockModel(report.center, report.spread, partition)
        return self

    def score_samples(self, X) -> np.ndarray:
        """Log-likelihood of each ranking under the fitted model."""
        check_is_fitted(self, "model_")
        return np.atleast_1d(self.model_.log_pmf(X))

    def score(self, X, y=None) -> float:
        """Mean log-likelihood of the batch under the fitted model."""
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples: int = 1, random_state=None) -> np.ndarray:
        """Draw rankings from the fitted model."""
        check_is_fitted(self, "model_")
        return self.model_.sample(n_samples, random_state=random_state)
