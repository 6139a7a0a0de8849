"""Rank statistics shared by the ensemble and the evaluation protocol."""

from __future__ import annotations

from typing import Sequence

import numpy as np


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of their covered positions."""
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x), dtype=float)
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        # positions i..j (0-based) share the mean of ranks i+1..j+1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(a: Sequence[float], b: Sequence[float]) -> float:
    """Spearman's rank correlation: Pearson correlation of average-tie ranks.

    Raises ValueError on length mismatch, fewer than two observations, or
    when both inputs are constant (the coefficient is undefined).  When
    exactly one input is constant the association is not measurable and the
    neutral value 0.0 is returned rather than NaN.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 1 or len(a) < 2:
        raise ValueError("spearman needs two 1-d sequences of length >= 2")
    a_const = bool(np.all(a == a[0]))
    b_const = bool(np.all(b == b[0]))
    if a_const and b_const:
        raise ValueError("spearman undefined: both inputs are constant")
    if a_const or b_const:
        return 0.0
    ra = average_ranks(a)
    rb = average_ranks(b)
    # perfect rank agreement (or reversal) is exactly +/-1 by definition;
    # skip the float arithmetic so monotone pairs never come out as 1-ulp
    if np.array_equal(ra, rb):
        return 1.0
    if np.array_equal(ra + rb, np.full(len(ra), len(ra) + 1.0)):
        return -1.0
    da = ra - ra.mean()
    db = rb - rb.mean()
    rho = float(np.dot(da, db) / np.sqrt(np.dot(da, da) * np.dot(db, db)))
    return max(-1.0, min(1.0, rho))
