"""Mallows block model toolkit.

Exact sampling, central-ranking and spread estimation, KL and total
variation computation, and a desk-scale experiment harness for the
model's finite-sample behavior.
"""

from .divergence import (
    DivergenceResult,
    kl,
    tv_coordinatewise_bound,
    tv_exact,
    tv_monte_carlo,
    tv_sum_stats,
)
from .estimators import (
    EstimationReport,
    MallowsBlockEstimator,
    estimate_central_ranking,
    estimate_full,
    estimate_spread,
    sample_size_guideline,
    single_sample_estimate,
)
from .expfam import OneParamFamily, chernoff_tail_bound, invert_mean, kl_closed_form
from .model import BlockPartition, MallowsBlockModel, sufficient_stats
from .permutations import (
    decode_inversion,
    discordance_matrix,
    discordance_vector,
    identity,
    kendall_tau,
    ordering_to_ranks,
    ranks_to_ordering,
)
from .truncated_geometric import TruncatedGeometric, natural_family, partition_sum, sum_family
from .validation import CapabilityError

__version__ = "0.1.0"

__all__ = [
    "BlockPartition",
    "CapabilityError",
    "DivergenceResult",
    "EstimationReport",
    "MallowsBlockEstimator",
    "MallowsBlockModel",
    "OneParamFamily",
    "TruncatedGeometric",
    "chernoff_tail_bound",
    "decode_inversion",
    "discordance_matrix",
    "discordance_vector",
    "estimate_central_ranking",
    "estimate_full",
    "estimate_spread",
    "identity",
    "invert_mean",
    "kendall_tau",
    "kl",
    "kl_closed_form",
    "natural_family",
    "ordering_to_ranks",
    "partition_sum",
    "ranks_to_ordering",
    "sample_size_guideline",
    "single_sample_estimate",
    "sufficient_stats",
    "sum_family",
    "tv_coordinatewise_bound",
    "tv_exact",
    "tv_monte_carlo",
    "tv_sum_stats",
]
