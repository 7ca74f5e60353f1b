"""Streaming human-in-the-loop test-time adaptation.

Per batch of shifted test data the engine makes instant predictions, picks
a handful of samples for annotation by margin-weighted K-Center selection,
fans candidate adaptations out over a hyper-parameter pool, scores them
with an anchor-regularized smoothed validation objective, and refines the
winner on the fresh labels.
"""

__version__ = "0.1.0"

from .adapt import CandidatePool, HyperParam, adapt_candidate, default_pool, dual_pool
from .core import Batch, LabeledExample, Sample, argmax_class, entropy, make_rng, sorted_posterior
from .engine import (
    EngineConfig,
    OracleLabeler,
    SourceModel,
    StepReport,
    StreamSummary,
    labeler_oracle,
    run_stream,
    step_batch,
)
from .net import ModelParams, RunningStats, forward_batch, pretrain_source, sgd_step
from .scoring import EmaState, ema_update_and_select, minmax_normalize
from .selection import kcenter_greedy, margin_weighted_embedding
from .stream import StreamSpec, gen_continual_stream, gen_source_dataset

__all__ = [
    "Batch",
    "CandidatePool",
    "EmaState",
    "EngineConfig",
    "HyperParam",
    "LabeledExample",
    "ModelParams",
    "OracleLabeler",
    "RunningStats",
    "Sample",
    "SourceModel",
    "StepReport",
    "StreamSpec",
    "StreamSummary",
    "adapt_candidate",
    "argmax_class",
    "default_pool",
    "dual_pool",
    "ema_update_and_select",
    "entropy",
    "forward_batch",
    "gen_continual_stream",
    "gen_source_dataset",
    "kcenter_greedy",
    "labeler_oracle",
    "make_rng",
    "margin_weighted_embedding",
    "minmax_normalize",
    "pretrain_source",
    "run_stream",
    "sgd_step",
    "sorted_posterior",
    "step_batch",
]
