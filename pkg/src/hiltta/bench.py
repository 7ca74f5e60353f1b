"""Benchmark plumbing shared by the CLI and the acceptance suite: prepare a
seeded run (source model + stream), execute engine configurations, and read
or write the results CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .adapt import CandidatePool, HyperParam
from .config import RunConfig
from .core import KEY_PRETRAIN, make_rng
from .engine import (
    EngineConfig,
    Labeler,
    SourceModel,
    StreamSummary,
    labeler_oracle,
    run_stream,
)
from .net import labeled_to_arrays, pretrain_source
from .stream import StreamSpec, gen_continual_stream, gen_source_dataset

CSV_HEADER = "run,domain,error_pct,labels_used,infer_ms_per_sample,adapt_ms_per_sample"


@dataclass(frozen=True)
class ResultRow:
    run: str
    domain: str
    error_pct: float
    labels_used: int
    infer_ms_per_sample: float
    adapt_ms_per_sample: float

    def line(self) -> str:
        return (
            f"{self.run},{self.domain},{self.error_pct:.4f},{self.labels_used},"
            f"{self.infer_ms_per_sample:.4f},{self.adapt_ms_per_sample:.4f}"
        )


def write_results_csv(path, rows: list[ResultRow]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row.line() + "\n")


def read_results_csv(path) -> list[ResultRow]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header '{header}'")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 fields")
            rows.append(
                ResultRow(parts[0], parts[1], float(parts[2]), int(parts[3]), float(parts[4]), float(parts[5]))
            )
    return rows


def summary_rows(label: str, summary: StreamSummary) -> list[ResultRow]:
    rows = [
        ResultRow(
            run=label,
            domain=str(d),
            error_pct=summary.per_domain_error_pct[d],
            labels_used=0,
            infer_ms_per_sample=summary.infer_ms_per_sample,
            adapt_ms_per_sample=summary.adapt_ms_per_sample,
        )
        for d in summary.per_domain_error_pct
    ]
    rows.append(
        ResultRow(
            run=label,
            domain="overall",
            error_pct=summary.overall_error_pct,
            labels_used=summary.labels_used,
            infer_ms_per_sample=summary.infer_ms_per_sample,
            adapt_ms_per_sample=summary.adapt_ms_per_sample,
        )
    )
    return rows


def prepare_run(
    spec: StreamSpec,
    hidden_dim: int = 32,
    n_per_class: int = 200,
    pretrain_lr: float = 0.5,
    pretrain_max_epochs: int = 2000,
):
    """Pretrain the source model and generate the stream for one seed."""
    examples = gen_source_dataset(spec, n_per_class)
    x, y = labeled_to_arrays(examples)
    params, running = pretrain_source(
        x,
        y,
        hidden_dim,
        spec.num_classes,
        make_rng(spec.seed, KEY_PRETRAIN),
        lr=pretrain_lr,
        max_epochs=pretrain_max_epochs,
    )
    stream = gen_continual_stream(spec)
    return SourceModel(params, running), stream


def prepare_from_config(cfg: RunConfig):
    return prepare_run(
        cfg.stream_spec(),
        hidden_dim=cfg.hidden_dim,
        n_per_class=cfg.n_per_class,
        pretrain_lr=cfg.pretrain_lr,
        pretrain_max_epochs=cfg.pretrain_max_epochs,
    )


def run_engine(
    config: EngineConfig,
    stream,
    source: SourceModel,
    labeler: Labeler | None = None,
    on_report=None,
):
    if labeler is None:
        labeler = labeler_oracle()
    return run_stream(config, stream, labeler, source, on_report=on_report)


def fixed_config(base: EngineConfig, hp: HyperParam, with_supervised: bool = False) -> EngineConfig:
    """A no-selection engine config that holds one hyper-parameter fixed."""
    return replace(
        base,
        pool=CandidatePool(base.method, (hp,)),
        label_rate=base.label_rate if with_supervised else 0.0,
        use_supervised=with_supervised,
        use_anchor=False,
        use_ema=False,
    )


def run_fixed_sweep(
    base: EngineConfig,
    stream,
    source: SourceModel,
    with_supervised: bool = False,
) -> list[tuple[HyperParam, StreamSummary]]:
    out = []
    for hp in base.pool.entries:
        cfg = fixed_config(base, hp, with_supervised)
        _, summary = run_engine(cfg, stream, source)
        out.append((hp, summary))
    return out


def sweep_rows(results: list[tuple[HyperParam, StreamSummary]]) -> list[ResultRow]:
    """One overall row per fixed hyper-parameter plus a min/mean/max summary row."""
    rows = []
    errors = []
    for hp, summary in results:
        errors.append(summary.overall_error_pct)
        rows.append(
            ResultRow(
                run=f"fixed[{hp.label()}]",
                domain="overall",
                error_pct=summary.overall_error_pct,
                labels_used=summary.labels_used,
                infer_ms_per_sample=summary.infer_ms_per_sample,
                adapt_ms_per_sample=summary.adapt_ms_per_sample,
            )
        )
    errors = np.asarray(errors)
    worst = results[int(np.argmax(errors))][0].label()
    best = results[int(np.argmin(errors))][0].label()
    rows.append(
        ResultRow(
            run=f"summary[worst={worst};best={best}]",
            domain="overall",
            error_pct=float(errors.mean()),
            labels_used=sum(s.labels_used for _, s in results),
            infer_ms_per_sample=float(np.mean([s.infer_ms_per_sample for _, s in results])),
            adapt_ms_per_sample=float(np.mean([s.adapt_ms_per_sample for _, s in results])),
        )
    )
    return rows


def expected_labels(n_batches: int, batch_size: int, label_rate: float, every: int) -> int:
    """Closed-form label budget: ceil(T/N) intervention batches, ceil(rate*N_b) each."""
    return math.ceil(n_batches / every) * math.ceil(label_rate * batch_size)
