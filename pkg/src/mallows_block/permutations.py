"""Permutation arithmetic on rankings of items ``1..m``.

Rankings are rank vectors: entry ``i - 1`` holds the position assigned to
item ``i``, so the entries are exactly ``1..m``.  ``ordering_to_ranks``
converts the other common notation (items listed best-first).

The discordance encoding aligns slots with a center ranking: slot ``p``
(1-based) belongs to the item the center places at position ``p`` and
counts how many of the ``p - 1`` items the center ranks earlier end up
after that item in the other ranking.  Slot ``p`` therefore takes values
in ``{0, ..., p - 1}``, the slots sum to the Kendall tau distance, and
the encoding is a bijection on the symmetric group for every center,
which is what makes exact sampling by independent slot draws possible.
For the identity center this is the classic per-item inversion table.
"""

from __future__ import annotations

import numpy as np

from .validation import check_permutation, check_rank_matrix

__all__ = [
    "identity",
    "ordering_to_ranks",
    "ranks_to_ordering",
    "kendall_tau",
    "max_kendall_tau",
    "discordance_vector",
    "discordance_matrix",
    "decode_inversion",
    "read_rankings",
    "write_rankings",
]

# Bound on booleans allocated per comparison chunk (~8 MB).
_CHUNK_BUDGET = 1 << 23


def identity(m: int) -> np.ndarray:
    """The identity ranking on ``m`` items."""
    if m < 1:
        raise ValueError("m must be at least 1")
    return np.arange(1, m + 1, dtype=np.int64)


def ordering_to_ranks(ordering) -> np.ndarray:
    """Convert an ordering (items listed best-first) to a rank vector."""
    order = check_permutation(ordering, name="ordering")
    ranks = np.empty_like(order)
    ranks[order - 1] = np.arange(1, order.size + 1)
    return ranks


def ranks_to_ordering(ranks) -> np.ndarray:
    """Convert a rank vector to an ordering (items listed best-first)."""
    arr = check_permutation(ranks)
    return np.argsort(arr) + 1


def max_kendall_tau(m: int) -> int:
    """Largest possible Kendall tau distance between rankings of ``m`` items."""
    return m * (m - 1) // 2


def _merge_count(seq: list) -> tuple[list, int]:
    """Merge sort that also counts inversions."""
    n = len(seq)
    if n <= 1:
        return seq, 0
    left, a = _merge_count(seq[: n // 2])
    right, b = _merge_count(seq[n // 2 :])
    merged = []
    count = a + b
    i = j = 0
    while i < len(left) and j < len(right):
        if left[i] <= right[j]:
            merged.append(left[i])
            i += 1
        else:
            merged.append(right[j])
            count += len(left) - i
            j += 1
    merged += left[i:]
    merged += right[j:]
    return merged, count


def kendall_tau(a, b) -> int:
    """Number of item pairs the two rankings order oppositely.

    Runs in O(m log m) by counting inversions of one ranking expressed in
    the positions of the other.
    """
    a = check_permutation(a, name="a")
    b = check_permutation(b, m=a.size, name="b")
    seq = a[np.argsort(b)]
    _, inversions = _merge_count(seq.tolist())
    return inversions


def discordance_matrix(X, center) -> np.ndarray:
    """Center-aligned discordance slots for a batch of rankings.

    Returns an ``(n, m)`` integer array whose row ``r``, slot ``p - 1``
    counts the items ranked before position ``p`` by ``center`` but after
    the item at ``center`` position ``p`` by ``X[r]``.  Row sums equal the
    Kendall tau distances to ``center``.
    """
    X = check_rank_matrix(X)
    center = check_permutation(center, m=X.shape[1], name="center")
    n, m = X.shape
    by_center_position = np.argsort(center)
    S = X[:, by_center_position]
    earlier = np.triu(np.ones((m, m), dtype=bool), k=1)  # earlier[q, p] == (q < p)
    out = np.empty((n, m), dtype=np.int64)
    rows_per_chunk = max(1, _CHUNK_BUDGET // (m * m))
    for start in range(0, n, rows_per_chunk):
        stop = min(start + rows_per_chunk, n)
        chunk = S[start:stop]
        beaten = chunk[:, :, None] > chunk[:, None, :]  # [r, q, p]: S[r,q] > S[r,p]
        out[start:stop] = np.einsum("rqp,qp->rp", beaten, earlier, dtype=np.int64)
    return out


def discordance_vector(sigma, center) -> np.ndarray:
    """Center-aligned discordance slots of a single ranking.

    Slot ``p - 1`` lies in ``{0, ..., p - 1}`` and the slots sum to
    ``kendall_tau(sigma, center)``.
    """
    sigma = check_permutation(sigma, name="sigma")
    return discordance_matrix(sigma.reshape(1, -1), center)[0]


def decode_inversion(v, center) -> np.ndarray:
    """Invert :func:`discordance_vector`: rebuild the unique matching ranking.

    Inserts the center's items best-first; slot value ``v[p - 1]`` says how
    many already-placed items must come after the item being inserted.
    """
    center = check_permutation(center, name="center")
    m = center.size
    v = np.asarray(v, dtype=np.int64)
    if v.shape != (m,):
        raise ValueError(f"v has shape {v.shape}, expected ({m},)")
    slots = np.arange(m)
    if np.any(v < 0) or np.any(v > slots):
        bad = int(np.flatnonzero((v < 0) | (v > slots))[0])
        raise ValueError(f"v[{bad}] = {v[bad]} outside 0..{bad}")
    items_by_position = np.argsort(center) + 1
    placed: list[int] = []
    for p in range(m):
        placed.insert(p - int(v[p]), int(items_by_position[p]))
    ranks = np.empty(m, dtype=np.int64)
    ranks[np.asarray(placed) - 1] = np.arange(1, m + 1)
    return ranks


def read_rankings(path) -> np.ndarray:
    """Read rankings from text: one rank vector per line, '#' starts a comment.

    Returns an ``(n, m)`` validated array; an empty file yields shape (0, 0).
    """
    rows: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            try:
                rows.append([int(tok) for tok in body.split()])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a whitespace-separated integer ranking")
    if not rows:
        return np.empty((0, 0), dtype=np.int64)
    lengths = {len(r) for r in rows}
    if len(lengths) != 1:
        raise ValueError(f"{path}: rankings of mixed lengths {sorted(lengths)}")
    return check_rank_matrix(np.asarray(rows, dtype=np.int64), name=str(path))


def write_rankings(X, path) -> None:
    """Write rankings as text, one rank vector per line."""
    X = np.asarray(X, dtype=np.int64)
    with open(path, "w", encoding="utf-8") as fh:
        for row in X.reshape(-1, X.shape[-1]) if X.size else []:
            fh.write(" ".join(str(int(x)) for x in row) + "\n")
