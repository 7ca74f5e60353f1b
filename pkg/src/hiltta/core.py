"""Shared numeric primitives: deterministic RNG construction, streaming data
containers, and elementary posterior operations.

Everything here is an immutable value; functions are pure. All stochastic
code in the package draws from generators built by :func:`make_rng` so a run
is a function of its seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Probabilities are clamped to this floor before any log so saturated
# softmax outputs never produce -inf.
PROB_FLOOR = 1e-12
PROB_SUM_TOL = 1e-9


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Deterministic generator for (seed, key).

    The same arguments yield a bit-identical stream on any platform (PCG64
    sequenced through SeedSequence). Components derive independent streams
    by passing distinct integer keys, so adding a consumer never perturbs
    the draws seen by another.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, key)])))


# Fixed stream keys, one per stochastic subsystem.
KEY_SOURCE = 1
KEY_STREAM = 2
KEY_PRETRAIN = 3
KEY_ENGINE = 4
KEY_PROJECTION = 5


@dataclass(frozen=True)
class Sample:
    """One test-stream sample; `true_label` is only read by labelers and the
    error accounting of the harness, never by the adaptation path."""

    id: int
    x: np.ndarray
    true_label: int
    domain_index: int


@dataclass(frozen=True)
class Batch:
    """A mini-batch of the test stream, stored columnar for vector math."""

    index: int
    domain_index: int
    ids: np.ndarray          # (N,) int64, unique within the run
    x: np.ndarray            # (N, D) float64
    true_labels: np.ndarray  # (N,) int64, hidden from the adaptation path

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(int(self.ids[i]), self.x[i], int(self.true_labels[i]), self.domain_index)


@dataclass(frozen=True)
class LabeledExample:
    sample_id: int
    x: np.ndarray
    y: int


def validate_prob_vector(p: np.ndarray) -> np.ndarray:
    """Check the probability-vector contract and return p as float64."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be 1-D and non-empty")
    if np.any(p < -PROB_SUM_TOL) or np.any(p > 1.0 + PROB_SUM_TOL):
        raise ValueError("probability entries must lie in [0, 1]")
    if abs(float(p.sum()) - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"probabilities sum to {p.sum():.12f}, expected 1")
    return p


def argmax_class(p: np.ndarray) -> int:
    """Predicted class index; ties break to the smallest index."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("argmax_class needs a non-empty 1-D vector")
    return int(np.argmax(p))


def entropy(p: np.ndarray) -> float | np.ndarray:
    """Shannon entropy in nats, -sum p log p with 0 log 0 = 0.

    Accepts a single vector or a row-stacked matrix of posteriors; rows are
    reduced independently.
    """
    p = np.asarray(p, dtype=np.float64)
    logp = np.log(np.clip(p, PROB_FLOOR, 1.0))
    terms = np.where(p > 0.0, p * logp, 0.0)
    out = -terms.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def sorted_posterior(p: np.ndarray) -> np.ndarray:
    """Posterior sorted descending (p_hat_1 >= ... >= p_hat_C)."""
    p = np.asarray(p, dtype=np.float64)
    return np.sort(p, axis=-1)[..., ::-1]


def format_float(v: float) -> str:
    """Shortest decimal text that round-trips the exact float64 value."""
    return repr(float(v))
