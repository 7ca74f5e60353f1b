"""Command-line front end.

Subcommands: gen-data, pretrain, run, sweep-fixed, report, serve. All take
`--config PATH` plus repeatable `--set key=value` overrides; `hiltta keys`
prints the full key list.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import (
    prepare_from_config,
    run_engine,
    run_fixed_sweep,
    summary_rows,
    sweep_rows,
    write_results_csv,
)
from .config import ConfigError, describe_keys, load_config
from .net import load_model, save_model
from .stream import (
    gen_continual_stream,
    gen_source_dataset,
    source_to_rows,
    stream_to_rows,
    write_dataset,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, default=None, help="run configuration file")
    p.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hiltta", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write the source dataset and stream files")
    _add_common(p)

    p = sub.add_parser("pretrain", help="pretrain the source model and save a checkpoint")
    _add_common(p)

    p = sub.add_parser("run", help="run the full adaptation engine over the stream")
    _add_common(p)
    p.add_argument("--pretrain", action="store_true", help="pretrain instead of loading a checkpoint")

    p = sub.add_parser("sweep-fixed", help="run every pool entry with fixed hyper-parameters")
    _add_common(p)
    p.add_argument("--with-supervised", action="store_true", help="also consume labels for supervised updates")

    p = sub.add_parser("report", help="merge results CSVs; write sweeps and figures")
    _add_common(p)
    p.add_argument("csvs", nargs="+", help="input results CSVs")

    p = sub.add_parser("serve", help="run with a human labeler behind the annotation console")
    _add_common(p)
    p.add_argument("--pretrain", action="store_true", help="pretrain instead of loading a checkpoint")

    sub.add_parser("keys", help="list all config keys with defaults")
    return parser


def cmd_gen_data(cfg) -> int:
    spec = cfg.stream_spec()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    examples = gen_source_dataset(spec, cfg.n_per_class)
    write_dataset(out / "source.txt", source_to_rows(examples), spec.input_dim, spec.num_classes)
    stream = gen_continual_stream(spec)
    write_dataset(out / "stream.txt", stream_to_rows(stream), spec.input_dim, spec.num_classes)
    print(f"wrote {out / 'source.txt'} ({len(examples)} examples)")
    print(f"wrote {out / 'stream.txt'} ({sum(len(b) for b in stream)} samples, {len(stream)} batches)")
    return 0


def cmd_pretrain(cfg) -> int:
    source, _ = prepare_from_config(cfg)
    path = cfg.resolved_model_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    save_model(path, source.params, source.running)
    print(f"wrote {path}")
    return 0


def _source_model(cfg, do_pretrain: bool):
    from .engine import SourceModel

    path = cfg.resolved_model_path()
    if do_pretrain or not path.exists():
        if not do_pretrain and not path.exists():
            raise ConfigError(f"no checkpoint at {path}; run `hiltta pretrain` or pass --pretrain")
        source, stream = prepare_from_config(cfg)
        return source, stream
    params, running = load_model(path)
    stream = gen_continual_stream(cfg.stream_spec())
    return SourceModel(params, running), stream


def cmd_run(cfg, do_pretrain: bool) -> int:
    source, stream = _source_model(cfg, do_pretrain)
    engine_cfg = cfg.engine_config()
    _, summary = run_engine(engine_cfg, stream, source)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "results.csv"
    write_results_csv(path, summary_rows(cfg.run_label, summary))
    print(f"wrote {path}")
    print(
        f"{cfg.run_label}: overall error {summary.overall_error_pct:.2f}% "
        f"({summary.labels_used} labels, {summary.n_samples} samples)"
    )
    return 0


def cmd_sweep_fixed(cfg, with_supervised: bool) -> int:
    # reuse a checkpoint when present, pretrain otherwise
    source, stream = _source_model(cfg, do_pretrain=not cfg.resolved_model_path().exists())
    engine_cfg = cfg.engine_config()
    results = run_fixed_sweep(engine_cfg, stream, source, with_supervised=with_supervised)
    rows = sweep_rows(results)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sweep_fixed.csv"
    write_results_csv(path, rows)
    print(f"wrote {path}")
    errors = [s.overall_error_pct for _, s in results]
    best, worst = min(errors), max(errors)
    print(f"best {best:.2f}%  avg {sum(errors) / len(errors):.2f}%  worst {worst:.2f}%")
    return 0


def cmd_report(cfg, csvs: list[str]) -> int:
    from .report import build_report

    written = build_report(csvs, cfg.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_serve(cfg, do_pretrain: bool) -> int:
    from .service import serve_run

    source, stream = _source_model(cfg, do_pretrain)
    return serve_run(cfg, source, stream)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "keys":
        print(describe_keys())
        return 0
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "gen-data":
            return cmd_gen_data(cfg)
        if args.command == "pretrain":
            return cmd_pretrain(cfg)
        if args.command == "run":
            return cmd_run(cfg, args.pretrain)
        if args.command == "sweep-fixed":
            return cmd_sweep_fixed(cfg, args.with_supervised)
        if args.command == "report":
            return cmd_report(cfg, args.csvs)
        if args.command == "serve":
            return cmd_serve(cfg, args.pretrain)
        raise ConfigError(f"unhandled command {args.command}")
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
