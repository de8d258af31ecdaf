"""The Mallows block model over rankings of ``m`` items.

A model is a center ranking, a partition of the ranking positions
``1..m`` into ``d`` blocks, and one spread parameter per block.  The
probability of a ranking decays geometrically in each block's share of
the discordance slots against the center, the per-block share being the
block's sufficient statistic.  Because the slots are independent
truncated geometrics under the model, the partition function factors
over positions, sampling is exact, and each block carries its own
one-parameter exponential family.

``d = 1`` is the classic single-parameter model; singleton blocks give
one parameter per position.
"""

from __future__ import annotations

import json
import math
from functools import cached_property

import numpy as np

from . import permutations as perms
from .expfam import OneParamFamily
from .truncated_geometric import TruncatedGeometric, sum_family
from .validation import as_generator, check_permutation, check_rank_matrix, check_spread

__all__ = ["BlockPartition", "MallowsBlockModel", "sufficient_stats"]


class BlockPartition:
    """A partition of the ranking positions ``1..m`` into nonempty blocks.

    Positions are the slots of the center ranking, so block membership is
    invariant under relabeling items.  Blocks may be arbitrary subsets;
    contiguity is not required.
    """

    def __init__(self, blocks):
        cleaned = []
        seen: set[int] = set()
        for b, block in enumerate(blocks):
            members = sorted(int(p) for p in block)
            if not members:
                raise ValueError(f"block {b} is empty")
            overlap = seen.intersection(members)
            if overlap:
                raise ValueError(f"position {min(overlap)} appears in more than one block")
            seen.update(members)
            cleaned.append(tuple(members))
        if not cleaned:
            raise ValueError("partition needs at least one block")
        m = max(seen)
        if seen != set(range(1, m + 1)):
            missing = min(set(range(1, m + 1)) - seen)
            raise ValueError(f"blocks must cover 1..{m} exactly; position {missing} is missing")
        self.blocks: tuple[tuple[int, ...], ...] = tuple(cleaned)
        self.m: int = m
        self.d: int = len(cleaned)
        block_of = np.empty(m, dtype=np.int64)
        for b, members in enumerate(self.blocks):
            block_of[np.asarray(members) - 1] = b
        self.block_of: np.ndarray = block_of

    @classmethod
    def single(cls, m: int) -> "BlockPartition":
        """One block holding every position: the single-parameter model."""
        return cls([range(1, m + 1)])

    @classmethod
    def singletons(cls, m: int) -> "BlockPartition":
        """One block per position: one spread parameter per position."""
        return cls([[p] for p in range(1, m + 1)])

    @property
    def min_block_size(self) -> int:
        return min(len(b) for b in self.blocks)

    def block_sizes(self) -> np.ndarray:
        return np.array([len(b) for b in self.blocks], dtype=np.int64)

    def truncations(self, i: int) -> np.ndarray:
        """Slot truncations ``p - 1`` for the positions of block ``i``."""
        if not 0 <= i < self.d:
            raise ValueError(f"block index {i} out of range 0..{self.d - 1}")
        return np.asarray(self.blocks[i], dtype=np.int64) - 1

    def block_sums(self, V: np.ndarray) -> np.ndarray:
        """Per-block sums of discordance slots, rowwise for an (n, m) array."""
        V = np.asarray(V)
        out = np.empty(V.shape[:-1] + (self.d,), dtype=V.dtype)
        for b, members in enumerate(self.blocks):
            out[..., b] = V[..., np.asarray(members) - 1].sum(axis=-1)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, BlockPartition) and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash(self.blocks)

    def __repr__(self) -> str:
        return f"BlockPartition({[list(b) for b in self.blocks]})"


def sufficient_stats(partition: BlockPartition, pi, center) -> np.ndarray:
    """Per-block discordance sums of ``pi`` against ``center``.

    The entries sum to the Kendall tau distance between the rankings.
    """
    pi = check_permutation(pi, m=partition.m, name="pi")
    V = perms.discordance_vector(pi, center)
    return partition.block_sums(V)


class MallowsBlockModel:
    """A center ranking with per-block geometric spread over discordances.

    Parameters
    ----------
    center : array-like
        Rank vector of the central ranking (values ``1..m``).
    phis : float or array-like
        Spread parameter per block, each in ``[0, 1]``; 0 concentrates all
        mass on the center, 1 is uniform over all rankings.
    partition : BlockPartition, optional
        Defaults to a single block spanning all positions, in which case
        ``phis`` must be a scalar (or length-1 vector).
    """

    def __init__(self, center, phis, partition: BlockPartition | None = None):
        self.center = check_permutation(center, name="center")
        m = self.center.size
        self.partition = BlockPartition.single(m) if partition is None else partition
        if self.partition.m != m:
            raise ValueError(
                f"partition covers {self.partition.m} positions but center ranks {m} items"
            )
        self.phis = check_spread(phis, d=self.partition.d)

    @property
    def m(self) -> int:
        return self.center.size

    @property
    def d(self) -> int:
        return self.partition.d

    @cached_property
    def _slot_dists(self) -> tuple[TruncatedGeometric, ...]:
        phi_of_slot = self.phis[self.partition.block_of]
        return tuple(
            TruncatedGeometric(phi_of_slot[p], p) for p in range(self.m)
        )

    def log_partition(self) -> float:
        """Log normalizer; factors over positions as a product of geometric sums."""
        return float(sum(math.log(dist.partition) for dist in self._slot_dists))

    def block_family(self, i: int) -> OneParamFamily:
        """The exponential family of block ``i``'s sufficient statistic."""
        return sum_family(self.partition.truncations(i))

    def sufficient_stats(self, X) -> np.ndarray:
        """Per-block discordance sums, one row per ranking in ``X``."""
        X = check_rank_matrix(X, m=self.m)
        V = perms.discordance_matrix(X, self.center)
        return self.partition.block_sums(V)

    def log_pmf(self, X) -> np.ndarray | float:
        """Log probability of each ranking in ``X``.

        Rankings outside the support (a positive block statistic where the
        block's spread is zero) get ``-inf``.
        """
        X = np.asarray(X)
        single = X.ndim == 1
        T = self.sufficient_stats(X)
        out = np.full(T.shape[0], -self.log_partition(), dtype=np.float64)
        for b in range(self.d):
            phi = self.phis[b]
            if phi == 0.0:
                out[T[:, b] > 0] = -np.inf
            else:
                out += T[:, b] * math.log(phi)
        return float(out[0]) if single else out

    def pmf(self, X) -> np.ndarray | float:
        return np.exp(self.log_pmf(X))

    def sample(self, n_samples: int = 1, random_state=None) -> np.ndarray:
        """Draw ``n_samples`` rankings exactly.

        Samples each discordance slot from its truncated geometric and
        decodes; the resulting distribution matches :meth:`log_pmf` exactly.
        """
        if n_samples < 0:
            raise ValueError("n_samples must be nonnegative")
        rng = as_generator(random_state)
        V = np.empty((n_samples, self.m), dtype=np.int64)
        for p, dist in enumerate(self._slot_dists):
            V[:, p] = dist.sample(rng, size=n_samples)
        out = np.empty((n_samples, self.m), dtype=np.int64)
        for r in range(n_samples):
            out[r] = perms.decode_inversion(V[r], self.center)
        return out

    def sum_stat_distribution(self, i: int) -> np.ndarray:
        """Exact probability vector of block ``i``'s statistic over ``0..max``.

        Computed by convolving the block's slot distributions; the mean and
        variance match the block family's derivatives.
        """
        phi = self.phis[i]
        pmf = np.ones(1, dtype=np.float64)
        for k in self.partition.truncations(i):
            pmf = np.convolve(pmf, TruncatedGeometric(phi, int(k)).pmf_array())
        return pmf

    # -- JSON document interface ------------------------------------------

    def to_dict(self) -> dict:
        return {
            "m": int(self.m),
            "pi0": [int(r) for r in self.center],
            "blocks": [[int(p) for p in block] for block in self.partition.blocks],
            "phis": [float(phi) for phi in self.phis],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MallowsBlockModel":
        for field in ("m", "pi0", "blocks", "phis"):
            if field not in doc:
                raise ValueError(f"model document is missing field '{field}'")
        m = int(doc["m"])
        center = check_permutation(doc["pi0"], m=m, name="pi0")
        partition = BlockPartition(doc["blocks"])
        if partition.m != m:
            raise ValueError(f"blocks cover {partition.m} positions, field 'm' says {m}")
        return cls(center, doc["phis"], partition)

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "MallowsBlockModel":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as err:
                raise ValueError(f"{path}: not valid JSON ({err})") from err
        return cls.from_dict(doc)

    def __repr__(self) -> str:
        return (
            f"MallowsBlockModel(m={self.m}, d={self.d}, "
            f"phis={np.array2string(self.phis, precision=4)})"
        )
