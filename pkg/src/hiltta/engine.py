"""Per-batch orchestration: predict, select samples for annotation, fan out
candidate adaptations, score and pick the winner, refine it with the labels.

Ordering matters: the instant prediction for every sample is computed from
the previous winner before any gradient step touches its batch. Human
intervention (annotation + model selection + supervised refinement) runs on
every `intervention_every`-th batch starting with the first; the batches in
between adapt once with the last chosen hyper-parameter.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np

from .adapt import CandidatePool, adapt_candidate, default_pool
from .core import KEY_ENGINE, Batch, make_rng
from .net import (
    ModelParams,
    NonFiniteGradientError,
    RunningStats,
    capture_running_stats,
    ce_loss_grad,
    forward_batch,
    sgd_step,
)
from .scoring import EmaState, anchor_from_probs, ce_from_probs, ema_update_and_select, minmax_normalize
from .selection import STRATEGIES, select_for_annotation

LINEAGE_FORK = "fork"
LINEAGE_PERSISTENT = "persistent"


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    method: str = "tent"
    pool: CandidatePool | None = None   # None -> default pool for the method
    label_rate: float = 0.03
    intervention_every: int = 1         # N; annotate batches 1, N+1, 2N+1, ...
    ema_beta: float = 0.5
    adapt_steps: int = 1
    adapt_lr: float = 0.1               # unsupervised lr for pl entries without one
    supervised_lr: float = 0.1
    supervised_steps: int = 3
    supervised_full_stats: bool = True  # normalize the labeled subset with full-batch statistics
    candidate_lineage: str = LINEAGE_FORK
    use_anchor: bool = True
    use_ema: bool = True
    use_supervised: bool = True
    selection_strategy: str = "kmargin"
    seed: int = 0
    record_timing: bool = True

    def __post_init__(self):
        if self.pool is None:
            object.__setattr__(self, "pool", default_pool(self.method))
        if self.pool.method != self.method:
            raise ValueError(f"pool method '{self.pool.method}' != engine method '{self.method}'")
        if not 0.0 <= self.label_rate <= 1.0:
            raise ValueError("label_rate must lie in [0, 1]")
        if self.intervention_every < 1:
            raise ValueError("intervention_every must be >= 1")
        if self.candidate_lineage not in (LINEAGE_FORK, LINEAGE_PERSISTENT):
            raise ValueError(f"unknown candidate lineage '{self.candidate_lineage}'")
        if self.selection_strategy not in STRATEGIES:
            raise ValueError(f"unknown selection strategy '{self.selection_strategy}'")

    def labels_per_batch(self, batch_size: int) -> int:
        return math.ceil(self.label_rate * batch_size)


@dataclass(frozen=True)
class SourceModel:
    params: ModelParams
    running: RunningStats


@dataclass(frozen=True)
class LabelQuery:
    """What a labeler gets to see about one selected sample."""

    sample_id: int
    x: np.ndarray
    posterior: np.ndarray


@dataclass(frozen=True)
class LabelResult:
    labels: dict[int, int]          # sample_id -> class index
    fallback: bool = False          # a timeout/fallback path produced (part of) them
    allow_supervised: bool = True   # false under the skip-supervised fallback policy


class Labeler(Protocol):
    def label(self, batch: Batch, queries: list[LabelQuery]) -> LabelResult: ...


class OracleLabeler:
    """Answers with the ground truth of the current batch, instantly."""

    def label(self, batch: Batch, queries: list[LabelQuery]) -> LabelResult:
        pos = {int(sid): i for i, sid in enumerate(batch.ids)}
        labels = {}
        for q in queries:
            if q.sample_id not in pos:
                raise KeyError(f"sample {q.sample_id} is not in the current batch")
            labels[q.sample_id] = int(batch.true_labels[pos[q.sample_id]])
        return LabelResult(labels=labels)


def labeler_oracle() -> OracleLabeler:
    return OracleLabeler()


@dataclass(frozen=True)
class StepReport:
    """Complete per-batch record; selection fields are empty off-intervention."""

    batch_index: int
    domain_index: int
    n_samples: int
    n_correct: int
    predictions: np.ndarray
    intervention: bool
    selected_ids: list[int]
    chosen_index: int
    chosen_hp: str
    ce_raw: list[float]
    anchor_raw: list[float]
    s_ce: list[float]
    s_anchor: list[float]
    combined: list[float]
    ema: list[float]
    disqualified: list[bool]
    fallback: bool
    infer_ms: float
    adapt_ms: float

    def key_fields(self) -> tuple:
        """Everything except wall-clock timings, for bit-identity comparisons."""
        return (
            self.batch_index,
            self.domain_index,
            self.n_samples,
            self.n_correct,
            self.predictions.tobytes(),
            self.intervention,
            tuple(self.selected_ids),
            self.chosen_index,
            self.chosen_hp,
            tuple(self.ce_raw),
            tuple(self.anchor_raw),
            tuple(self.s_ce),
            tuple(self.s_anchor),
            tuple(self.combined),
            tuple(self.ema),
            tuple(self.disqualified),
            self.fallback,
        )


@dataclass(frozen=True)
class EngineState:
    params: ModelParams
    anchor: ModelParams
    running: RunningStats
    ema: EmaState
    last_choice: int
    batches_seen: int
    candidates: tuple[ModelParams, ...] | None  # persistent-lineage trajectories
    rng: np.random.Generator = field(compare=False)


def init_state(config: EngineConfig, source: SourceModel) -> EngineState:
    pool = config.pool
    candidates = None
    if config.candidate_lineage == LINEAGE_PERSISTENT:
        candidates = tuple(source.params for _ in pool.entries)
    return EngineState(
        params=source.params,
        anchor=source.params,
        running=source.running,
        ema=EmaState.fresh(len(pool), beta=config.ema_beta),
        last_choice=len(pool) // 2,
        batches_seen=0,
        candidates=candidates,
        rng=make_rng(config.seed, KEY_ENGINE),
    )


def _now(config: EngineConfig) -> float:
    return time.perf_counter() if config.record_timing else 0.0


def _gather_labels(batch: Batch, queries: list[LabelQuery], result: LabelResult, num_classes: int):
    """Align a labeler's answers with the query order, validating the contract."""
    xs, ys, ids = [], [], []
    for q in queries:
        if q.sample_id in result.labels:
            y = int(result.labels[q.sample_id])
            if not 0 <= y < num_classes:
                raise EngineError(f"labeler returned class {y} outside 0..{num_classes - 1}")
            xs.append(q.x)
            ys.append(y)
            ids.append(q.sample_id)
    unknown = set(result.labels) - {q.sample_id for q in queries}
    if unknown:
        raise EngineError(f"labeler answered for unrequested samples {sorted(unknown)}")
    if len(ids) < len(queries) and not result.fallback:
        raise EngineError(
            f"labeler returned {len(ids)} labels for {len(queries)} requests without fallback"
        )
    return ids, xs, ys


def step_batch(
    state: EngineState, config: EngineConfig, batch: Batch, labeler: Labeler
) -> tuple[EngineState, StepReport]:
    pool = config.pool
    n_m = len(pool)
    t0 = _now(config)
    cache = forward_batch(state.params, batch.x, state.running)
    predictions = cache.probs.argmax(axis=1)
    n_correct = int((predictions == batch.true_labels).sum())  # reporting only
    infer_ms = (_now(config) - t0) * 1e3

    k = config.labels_per_batch(len(batch))
    is_intervention = state.batches_seen % config.intervention_every == 0
    if is_intervention and k == 0:
        if config.use_supervised or n_m > 1:
            raise EngineError(
                "label budget rounds to zero but supervised training or model "
                "selection is enabled; raise label_rate or shrink the pool"
            )
        is_intervention = False

    t1 = _now(config)
    empty: list[float] = []
    if not is_intervention:
        hp = pool.entries[state.last_choice]
        disqualified = [False] * 1
        try:
            new_params = adapt_candidate(
                state.params, batch.x, hp, config.method, config.adapt_steps, config.adapt_lr
            )
        except NonFiniteGradientError:
            new_params = state.params
            disqualified = [True]
        new_state = replace(state, params=new_params, batches_seen=state.batches_seen + 1)
        report = StepReport(
            batch_index=batch.index,
            domain_index=batch.domain_index,
            n_samples=len(batch),
            n_correct=n_correct,
            predictions=predictions,
            intervention=False,
            selected_ids=[],
            chosen_index=state.last_choice,
            chosen_hp=hp.label(),
            ce_raw=empty,
            anchor_raw=empty,
            s_ce=empty,
            s_anchor=empty,
            combined=empty,
            ema=empty,
            disqualified=disqualified,
            fallback=False,
            infer_ms=infer_ms,
            adapt_ms=(_now(config) - t1) * 1e3,
        )
        return new_state, report

    # --- annotation ---
    selected = select_for_annotation(
        config.selection_strategy, cache.probs, cache.features, batch.ids, k, state.rng
    )
    id_pos = {int(sid): i for i, sid in enumerate(batch.ids)}
    queries = [
        LabelQuery(sid, batch.x[id_pos[sid]], cache.probs[id_pos[sid]]) for sid in selected
    ]
    result = labeler.label(batch, queries)
    num_classes = state.params.dims[2]
    labeled_ids, xs, ys = _gather_labels(batch, queries, result, num_classes)
    have_labels = len(labeled_ids) > 0
    x_l = np.stack(xs) if have_labels else np.zeros((0, batch.dim))
    y_l = np.array(ys, dtype=np.int64)

    # --- candidate fan-out on the unlabeled remainder ---
    unlabeled_mask = ~np.isin(batch.ids, np.array(selected, dtype=np.int64))
    x_u = batch.x[unlabeled_mask]
    if x_u.shape[0] < 2:
        raise EngineError("unlabeled remainder too small for batch statistics")
    bases = (
        state.candidates
        if config.candidate_lineage == LINEAGE_PERSISTENT
        else tuple(state.params for _ in range(n_m))
    )
    candidates: list[ModelParams] = []
    disqualified = [False] * n_m
    # overflow in a diverging candidate is expected and handled by
    # disqualification below, so keep numpy quiet here
    with np.errstate(over="ignore", invalid="ignore"):
        for m, hp in enumerate(pool.entries):
            try:
                candidates.append(
                    adapt_candidate(bases[m], x_u, hp, config.method, config.adapt_steps, config.adapt_lr)
                )
            except NonFiniteGradientError:
                candidates.append(bases[m])
                disqualified[m] = True

    # --- scoring on the labeled subset (posteriors under full-batch statistics) ---
    if have_labels and n_m > 1:
        label_rows = np.array([id_pos[sid] for sid in labeled_ids], dtype=np.int64)
        anchor_probs = forward_batch(state.anchor, batch.x, state.running).probs[label_rows]
        ce_raw = np.full(n_m, np.nan)
        anc_raw = np.full(n_m, np.nan)
        with np.errstate(over="ignore", invalid="ignore"):
            for m in range(n_m):
                if disqualified[m]:
                    continue
                pm = forward_batch(candidates[m], batch.x, state.running).probs[label_rows]
                ce_m = ce_from_probs(pm, y_l)
                anc_m = anchor_from_probs(anchor_probs, pm)
                if not (np.isfinite(ce_m) and np.isfinite(anc_m)):
                    disqualified[m] = True
                    continue
                ce_raw[m] = ce_m
                anc_raw[m] = anc_m
        ok = ~np.array(disqualified)
        if not ok.any():
            raise EngineError("every candidate was disqualified (non-finite scores)")
        s_ce = np.zeros(n_m)
        s_anc = np.zeros(n_m)
        combined = np.full(n_m, np.inf)
        if ok.sum() >= 2:
            s_ce[ok] = minmax_normalize(ce_raw[ok])
            if config.use_anchor:
                s_anc[ok] = minmax_normalize(anc_raw[ok])
        combined[ok] = s_ce[ok] + s_anc[ok]
        if config.use_ema:
            # Disqualified candidates keep their history and sit this pick out.
            blend = np.where(ok, combined, state.ema.values)
            new_ema, _ = ema_update_and_select(state.ema, blend)
            effective = np.where(ok, new_ema.values, np.inf)
            winner = int(np.argmin(effective))
        else:
            new_ema = state.ema
            winner = int(np.argmin(combined))
        scores = (
            [float(v) for v in ce_raw],
            [float(v) for v in anc_raw],
            [float(v) for v in s_ce],
            [float(v) for v in s_anc],
            [float(v) for v in combined],
            [float(v) for v in new_ema.values],
        )
    else:
        # Degenerate single-candidate pool (or a fallback left us label-less):
        # nothing to rank, keep the only / previous choice.
        winner = 0 if n_m == 1 else state.last_choice
        if disqualified[winner]:
            candidates[winner] = bases[winner]
        new_ema = state.ema
        scores = (empty, empty, empty, empty, empty, empty)

    new_params = candidates[winner]

    # --- supervised refinement of the winner ---
    if config.use_supervised and have_labels and result.allow_supervised and len(y_l) >= 1:
        for _ in range(config.supervised_steps):
            if config.supervised_full_stats:
                stats = capture_running_stats(new_params, batch.x)
                _, grads = ce_loss_grad(new_params, x_l, y_l, stats, freeze_stats=True)
            else:
                _, grads = ce_loss_grad(new_params, x_l, y_l, state.running)
            new_params = sgd_step(new_params, grads, config.supervised_lr)

    new_state = replace(
        state,
        params=new_params,
        ema=new_ema,
        last_choice=winner,
        batches_seen=state.batches_seen + 1,
        candidates=tuple(candidates) if config.candidate_lineage == LINEAGE_PERSISTENT else None,
    )
    report = StepReport(
        batch_index=batch.index,
        domain_index=batch.domain_index,
        n_samples=len(batch),
        n_correct=n_correct,
        predictions=predictions,
        intervention=True,
        selected_ids=list(selected),
        chosen_index=winner,
        chosen_hp=pool.entries[winner].label(),
        ce_raw=scores[0],
        anchor_raw=scores[1],
        s_ce=scores[2],
        s_anchor=scores[3],
        combined=scores[4],
        ema=scores[5],
        disqualified=disqualified,
        fallback=result.fallback,
        infer_ms=infer_ms,
        adapt_ms=(_now(config) - t1) * 1e3,
    )
    return new_state, report


@dataclass(frozen=True)
class StreamSummary:
    overall_error_pct: float
    per_domain_error_pct: dict[int, float]
    per_domain_counts: dict[int, int]
    labels_used: int
    n_samples: int
    infer_ms_per_sample: float
    adapt_ms_per_sample: float


def summarize(reports: list[StepReport]) -> StreamSummary:
    totals: dict[int, list[int]] = {}
    n_all = 0
    correct_all = 0
    labels = 0
    infer = 0.0
    adapt = 0.0
    for r in reports:
        n_all += r.n_samples
        correct_all += r.n_correct
        labels += len(r.selected_ids)
        infer += r.infer_ms
        adapt += r.adapt_ms
        acc = totals.setdefault(r.domain_index, [0, 0])
        acc[0] += r.n_samples
        acc[1] += r.n_correct
    per_domain = {d: 100.0 * (1.0 - c / n) for d, (n, c) in sorted(totals.items())}
    counts = {d: n for d, (n, c) in sorted(totals.items())}
    return StreamSummary(
        overall_error_pct=100.0 * (1.0 - correct_all / n_all),
        per_domain_error_pct=per_domain,
        per_domain_counts=counts,
        labels_used=labels,
        n_samples=n_all,
        infer_ms_per_sample=infer / n_all,
        adapt_ms_per_sample=adapt / n_all,
    )


def run_stream(
    config: EngineConfig,
    stream: list[Batch],
    labeler: Labeler,
    source: SourceModel,
    on_report: Callable[[StepReport, StreamSummary], None] | None = None,
) -> tuple[list[StepReport], StreamSummary]:
    """Fold step_batch over the whole stream, collecting per-batch reports."""
    if not stream:
        raise EngineError("empty stream")
    state = init_state(config, source)
    reports: list[StepReport] = []
    for batch in stream:
        state, report = step_batch(state, config, batch, labeler)
        reports.append(report)
        if on_report is not None:
            on_report(report, summarize(reports))
    return reports, summarize(reports)
