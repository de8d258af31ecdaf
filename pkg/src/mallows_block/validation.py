"""Input validation helpers shared by the estimators, the models and the CLI."""

from __future__ import annotations

import numpy as np

__all__ = [
    "CapabilityError",
    "as_generator",
    "check_permutation",
    "check_rank_matrix",
    "check_spread",
]


class CapabilityError(RuntimeError):
    """Raised when a request exceeds what exact computation can deliver.

    Distinct from ``ValueError`` so callers (and the CLI exit-code contract)
    can tell "bad input" apart from "valid input, infeasible method".
    """


def as_generator(seed=None) -> np.random.Generator:
    """Return a ``numpy.random.Generator`` from a seed, seed sequence or generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_permutation(ranks, m: int | None = None, name: str = "ranks") -> np.ndarray:
    """Validate a rank vector: a length-``m`` rearrangement of ``1..m``.

    Entry ``i - 1`` is the position of item ``i``.
    """
    arr = np.asarray(ranks, dtype=np.int64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must rank at least one item")
    if m is not None and arr.size != m:
        raise ValueError(f"{name} ranks {arr.size} items, expected {m}")
    if not np.array_equal(np.sort(arr), np.arange(1, arr.size + 1)):
        raise ValueError(f"{name} is not a permutation of 1..{arr.size}")
    return arr


def check_rank_matrix(X, m: int | None = None, name: str = "X") -> np.ndarray:
    """Validate a batch of rankings as an ``(n, m)`` integer array.

    A single rank vector is promoted to a one-row batch.  Every row must be
    a permutation of ``1..m``.
    """
    arr = np.asarray(X, dtype=np.int64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of rankings, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must contain at least one ranking of at least one item")
    if m is not None and arr.shape[1] != m:
        raise ValueError(f"{name} ranks {arr.shape[1]} items, expected {m}")
    expected = np.arange(1, arr.shape[1] + 1)
    if not np.all(np.sort(arr, axis=1) == expected):
        bad = int(np.flatnonzero(np.any(np.sort(arr, axis=1) != expected, axis=1))[0])
        raise ValueError(f"{name} row {bad} is not a permutation of 1..{arr.shape[1]}")
    return arr


def check_spread(phis, d: int | None = None, name: str = "phis") -> np.ndarray:
    """Validate a vector of spread parameters, one per block, each in [0, 1]."""
    arr = np.atleast_1d(np.asarray(phis, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a scalar or vector, got shape {arr.shape}")
    if d is not None and arr.size != d:
        raise ValueError(f"{name} has {arr.size} entries, expected one per block ({d})")
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    return arr
