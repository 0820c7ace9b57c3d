"""Dependent multivariate dynamic time warping.

Per-step cost is the Euclidean distance between ``d``-dimensional points; the
recursion uses steps ``(1,0), (0,1), (1,1)`` with both ends anchored and no
warping-window constraint. The accumulation is vectorized along
anti-diagonals, so whole batches of pairs are processed at once.
"""

from __future__ import annotations

import numpy as np

from .series import InvalidInputError


def _as_sequence(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return x


def accumulate(cost: np.ndarray) -> np.ndarray:
    """DTW distance for a stack of local-cost matrices ``(..., n, m)``."""
    n, m = cost.shape[-2:]
    lead = cost.shape[:-2]
    acc = np.full(lead + (n + 1, m + 1), np.inf)
    acc[..., 0, 0] = 0.0
    for k in range(n + m - 1):
        i = np.arange(max(0, k - m + 1), min(k, n - 1) + 1)
        j = k - i
        best = np.minimum(np.minimum(acc[..., i, j], acc[..., i, j + 1]), acc[..., i + 1, j])
        acc[..., i + 1, j + 1] = cost[..., i, j] + best
    return acc[..., n, m]


def dtw(a, b) -> float:
    a, b = _as_sequence(a), _as_sequence(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise InvalidInputError("dtw needs non-empty sequences")
    if a.shape[1] != b.shape[1]:
        raise InvalidInputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    cost = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)
    return float(accumulate(cost))


def dtw_to_reference(batch: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """Distances from each ``(t, d)`` sequence in ``batch`` to one reference sequence."""
    batch = np.asarray(batch, dtype=np.float64)
    reference = _as_sequence(reference)
    if batch.ndim != 3 or batch.shape[2] != reference.shape[1]:
        raise InvalidInputError("batch must be (n, t, d) matching the reference dimensionality")
    if batch.shape[0] == 0:
        return np.zeros(0)
    cost = np.linalg.norm(batch[:, :, None, :] - reference[None, None, :, :], axis=-1)
    return accumulate(cost)


def dtw_matrix(left: np.ndarray, right: np.ndarray, chunk: int = 64) -> np.ndarray:
    """All-pairs distances between two stacks of sequences, ``(n, m)``."""
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    out = np.empty((left.shape[0], right.shape[0]))
    for s in range(0, left.shape[0], chunk):
        block = left[s : s + chunk]
        cost = np.linalg.norm(block[:, None, :, None, :] - right[None, :, None, :, :], axis=-1)
        out[s : s + chunk] = accumulate(cost)
    return out
