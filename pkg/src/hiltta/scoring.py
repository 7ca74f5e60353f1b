"""Candidate-model scoring on the labeled subset.

Two raw metrics per candidate: mean cross-entropy on the labeled samples
and mean deviation of the posterior from the frozen source model. Each is
min-max normalized across the pool, summed, and smoothed over batches with
an exponential moving average before the argmin pick.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import PROB_FLOOR, LabeledExample
from .net import ModelParams, RunningStats, forward_batch, labeled_to_arrays


def ce_from_probs(probs: np.ndarray, y: np.ndarray) -> float:
    """Mean -ln p_y over rows of posteriors."""
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    picked = probs[np.arange(len(y)), y]
    return float(-np.log(np.clip(picked, PROB_FLOOR, 1.0)).mean())


def anchor_from_probs(anchor_probs: np.ndarray, cand_probs: np.ndarray) -> float:
    """Mean Euclidean distance between source and candidate posterior rows."""
    diff = np.asarray(anchor_probs, dtype=np.float64) - np.asarray(cand_probs, dtype=np.float64)
    return float(np.linalg.norm(diff, axis=1).mean())


def ce_validation(
    params: ModelParams, labeled: list[LabeledExample], running: RunningStats | None = None
) -> float:
    """Validation cross-entropy of a candidate on the labeled subset."""
    if not labeled:
        raise ValueError("validation needs at least one labeled example")
    x, y = labeled_to_arrays(labeled)
    return ce_from_probs(forward_batch(params, x, running).probs, y)


def anchor_deviation(
    anchor: ModelParams,
    params: ModelParams,
    labeled: list[LabeledExample],
    running: RunningStats | None = None,
) -> float:
    """Mean posterior distance to the frozen source model on the labeled subset."""
    if not labeled:
        raise ValueError("anchor deviation needs at least one labeled example")
    x, _ = labeled_to_arrays(labeled)
    p0 = forward_batch(anchor, x, running).probs
    pm = forward_batch(params, x, running).probs
    return anchor_from_probs(p0, pm)


def minmax_normalize(values) -> np.ndarray:
    """Affine map of a pool's scores onto [0, 1]; all-equal input maps to zeros."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("min-max normalization needs at least two values")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


@dataclass(frozen=True)
class ValidationScores:
    ce_raw: np.ndarray
    anchor_raw: np.ndarray
    s_ce: np.ndarray
    s_anchor: np.ndarray
    combined: np.ndarray


def combined_score(ce_raw, anchor_raw) -> ValidationScores:
    ce_raw = np.asarray(ce_raw, dtype=np.float64)
    anchor_raw = np.asarray(anchor_raw, dtype=np.float64)
    if ce_raw.shape != anchor_raw.shape:
        raise ValueError(f"score lists differ in length: {ce_raw.shape} vs {anchor_raw.shape}")
    s_ce = minmax_normalize(ce_raw)
    s_anchor = minmax_normalize(anchor_raw)
    return ValidationScores(ce_raw, anchor_raw, s_ce, s_anchor, s_ce + s_anchor)


@dataclass(frozen=True)
class EmaState:
    """Per-candidate smoothed validation losses; fixed length for the run."""

    beta: float
    values: np.ndarray
    initialized: bool = False

    @classmethod
    def fresh(cls, n_candidates: int, beta: float = 0.5) -> "EmaState":
        if not 0.0 <= beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        return cls(beta=beta, values=np.zeros(n_candidates), initialized=False)


def ema_update_and_select(state: EmaState, batch_losses) -> tuple[EmaState, int]:
    """Blend the new per-batch losses into the moving average and pick the argmin.

    The first update seeds the average with the batch losses themselves;
    ties at the argmin break to the smallest candidate index.
    """
    losses = np.asarray(batch_losses, dtype=np.float64)
    if losses.shape != state.values.shape:
        raise ValueError("loss list length does not match the candidate pool")
    if state.initialized:
        new_values = state.beta * state.values + (1.0 - state.beta) * losses
    else:
        new_values = losses.copy()
    winner = int(np.argmin(new_values))
    return replace(state, values=new_values, initialized=True), winner
