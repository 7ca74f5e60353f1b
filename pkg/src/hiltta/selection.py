"""Annotation-sample selection.

The primary strategy weights each penultimate feature by its margin
uncertainty (1 - p_hat_1 + p_hat_2) and picks K centers by greedy
farthest-first K-Center traversal over the weighted embeddings. Baseline
strategies (random, entropy top-K, margin-only top-K) share the interface,
and an exhaustive K-Center oracle backs the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import entropy, sorted_posterior

STRATEGY_KMARGIN = "kmargin"
STRATEGY_RANDOM = "random"
STRATEGY_ENTROPY = "entropy"
STRATEGY_MARGIN = "margin_only"
STRATEGIES = (STRATEGY_KMARGIN, STRATEGY_RANDOM, STRATEGY_ENTROPY, STRATEGY_MARGIN)


@dataclass(frozen=True)
class WeightedEmbedding:
    sample_id: int
    g: np.ndarray
    weight: float


def margin_weights(posteriors: np.ndarray) -> np.ndarray:
    """Uncertainty weight 1 - p_hat_1 + p_hat_2 per row (in [0, 1])."""
    p = sorted_posterior(np.asarray(posteriors, dtype=np.float64))
    return 1.0 - p[..., 0] + p[..., 1]


def margin_weighted_embedding(posterior: np.ndarray, feature: np.ndarray) -> WeightedEmbedding:
    posterior = np.asarray(posterior, dtype=np.float64)
    if posterior.ndim != 1 or posterior.size < 2:
        raise ValueError("margin weighting needs at least two classes")
    w = float(margin_weights(posterior))
    return WeightedEmbedding(sample_id=-1, g=w * np.asarray(feature, dtype=np.float64), weight=w)


def weighted_embeddings(posteriors: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Row-stacked weighted embeddings g_i for a whole batch."""
    w = margin_weights(posteriors)
    return w[:, None] * np.asarray(features, dtype=np.float64)


def _argmax_smallest_id(values: np.ndarray, ids: np.ndarray, eligible: np.ndarray) -> int:
    """Position of the maximum among eligible rows; exact ties resolve to the
    smallest sample id."""
    rows = np.flatnonzero(eligible)
    best = values[rows].max()
    top = rows[values[rows] == best]
    return int(top[np.argmin(ids[top])])


def kcenter_greedy(g: np.ndarray, ids: np.ndarray, k: int) -> list[int]:
    """Farthest-first traversal over embeddings g (rows), returning K sample ids.

    The first center is the embedding with the largest norm; each following
    center maximizes the distance to its nearest chosen center. Only the
    given rows are eligible, so samples selected in earlier batches can
    never be re-picked.
    """
    g = np.asarray(g, dtype=np.float64)
    ids = np.asarray(ids, dtype=np.int64)
    n = g.shape[0]
    if k == 0:
        return []
    if k > n:
        raise ValueError(f"cannot select {k} of {n} samples")
    norms = np.linalg.norm(g, axis=1)
    eligible = np.ones(n, dtype=bool)
    first = _argmax_smallest_id(norms, ids, eligible)
    chosen = [first]
    eligible[first] = False
    min_dist = np.linalg.norm(g - g[first], axis=1)
    for _ in range(k - 1):
        nxt = _argmax_smallest_id(min_dist, ids, eligible)
        chosen.append(nxt)
        eligible[nxt] = False
        min_dist = np.minimum(min_dist, np.linalg.norm(g - g[nxt], axis=1))
    return [int(ids[i]) for i in chosen]


def covering_radius(g: np.ndarray, center_rows: list[int]) -> float:
    """max over points of the distance to the nearest chosen center."""
    g = np.asarray(g, dtype=np.float64)
    d = np.linalg.norm(g[:, None, :] - g[center_rows][None, :, :], axis=2)
    return float(d.min(axis=1).max())


def kcenter_bruteforce_oracle(g: np.ndarray, k: int) -> float:
    """Exact optimal covering radius by enumeration; test-sized inputs only."""
    g = np.asarray(g, dtype=np.float64)
    n = g.shape[0]
    if n > 16 or k > 5:
        raise ValueError("oracle limited to n <= 16, K <= 5")
    if not 1 <= k <= n:
        raise ValueError(f"K={k} out of range for n={n}")
    return min(covering_radius(g, list(subset)) for subset in combinations(range(n), k))


def _topk_smallest_id(scores: np.ndarray, ids: np.ndarray, k: int) -> list[int]:
    order = np.lexsort((ids, -scores))  # score desc, then id asc
    return [int(ids[i]) for i in order[:k]]


def select_for_annotation(
    strategy: str,
    posteriors: np.ndarray,
    features: np.ndarray,
    ids: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> list[int]:
    """Pick K sample ids from the current batch under the given strategy."""
    ids = np.asarray(ids, dtype=np.int64)
    if k == 0:
        return []
    if k > len(ids):
        raise ValueError(f"cannot select {k} of {len(ids)} samples")
    if strategy == STRATEGY_KMARGIN:
        return kcenter_greedy(weighted_embeddings(posteriors, features), ids, k)
    if strategy == STRATEGY_RANDOM:
        return [int(v) for v in rng.choice(ids, size=k, replace=False)]
    if strategy == STRATEGY_ENTROPY:
        return _topk_smallest_id(np.asarray(entropy(posteriors)), ids, k)
    if strategy == STRATEGY_MARGIN:
        return _topk_smallest_id(margin_weights(posteriors), ids, k)
    raise ValueError(f"unknown selection strategy '{strategy}'")
