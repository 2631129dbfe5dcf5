"""Independent reference implementations used to check the package.

Everything here is written the straightforward slow way, on purpose:
plain loops, stdlib statistics, no imports from the package internals
beyond data types. Tests compare package output against these.
"""

from __future__ import annotations

from collections import Counter

import numpy as np


def brute_force_topk(
    ids: list[str],
    vectors: np.ndarray,
    query: np.ndarray,
    metric: str,
    k: int,
) -> list[str]:
    """Exact top-k ids: score descending, ties by ascending id.

    Scores are larger-is-better: negated distance for l2, dot product
    for dot, normalized dot for cosine. Everything in float64.
    """
    V = vectors.astype(np.float64)
    q = query.astype(np.float64)
    if metric == "l2":
        scores = -np.linalg.norm(V - q, axis=1)
    elif metric == "dot":
        scores = V @ q
    elif metric == "cosine":
        Vn = V / np.linalg.norm(V, axis=1, keepdims=True)
        qn = q / np.linalg.norm(q)
        scores = Vn @ qn
    else:
        raise ValueError(metric)
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [ids[i] for i in order[:k]]


def recall_at_k(truth: list[str], got: list[str]) -> float:
    return len(set(truth) & set(got)) / len(truth)


def stats_reference(scores: list[float]) -> dict:
    """Mean, population variance/std, median, mode via first principles."""
    import statistics

    n = len(scores)
    mean = sum(scores) / n
    variance = statistics.pvariance(scores)
    std = statistics.pstdev(scores)
    ordered = sorted(scores)
    if n % 2 == 1:
        median = ordered[n // 2]
    else:
        median = (ordered[n // 2 - 1] + ordered[n // 2]) / 2.0
    counts = Counter(scores)
    top = max(counts.values())
    mode = min(v for v, c in counts.items() if c == top)
    return {
        "n": n,
        "mean": mean,
        "variance": variance,
        "std": std,
        "median": median,
        "mode": mode,
    }


def argmax_first(values: list[float]) -> int:
    """Index of the max; the earliest wins on ties."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


# Frozen 20-sitting score multisets, discovered by exhaustive search over
# multiples of 5 and locked here. Statistics were verified by hand:
# mean 28.75, population variance 92.1875, median 25, mode 25 for the
# first; mean 85.25, variance 36.1875, median 85, mode 85 for the second.
PRETEST_SCORES = [
    0, 15, 25, 25, 25, 25, 25, 25, 25, 25,
    25, 35, 35, 35, 35, 35, 40, 40, 40, 40,
]
POSTTEST_SCORES = [
    65, 75, 80, 85, 85, 85, 85, 85, 85, 85,
    85, 85, 90, 90, 90, 90, 90, 90, 90, 90,
]
