"""Merge per-run results CSVs into one comparison table, emit plot-ready
(x, error) files for any sweep encoded in the run labels, and render the
corresponding figures to PNG next to the delimited output.

Run labels of the form `name[value]` (e.g. budget[0.01], fixed[lr=0.001],
N[5]) are grouped into a sweep per `name`; numeric values get a line plot,
the merged table a bar chart.
"""

from __future__ import annotations

import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .bench import ResultRow, read_results_csv, write_results_csv

_SWEEP_RE = re.compile(r"^(?P<name>[A-Za-z_]+)\[(?P<value>[^\]]+)\]$")


def _numeric(value: str) -> float | None:
    try:
        return float(value)
    except ValueError:
        m = re.search(r"=([-+0-9.eE]+)$", value)
        if m:
            try:
                return float(m.group(1))
            except ValueError:
                return None
        return None


def merge_results(paths: list[str | Path]) -> list[ResultRow]:
    if not paths:
        raise ValueError("no input CSVs given")
    merged: list[ResultRow] = []
    seen = set()
    for path in paths:
        for row in read_results_csv(path):
            key = (row.run, row.domain)
            if key in seen:
                continue
            seen.add(key)
            merged.append(row)
    return merged


def sweep_groups(rows: list[ResultRow]) -> dict[str, list[tuple[str, float]]]:
    """name -> [(value, overall error)] for run labels shaped like name[value]."""
    groups: dict[str, list[tuple[str, float]]] = {}
    for row in rows:
        if row.domain != "overall":
            continue
        m = _SWEEP_RE.match(row.run)
        if not m or m.group("name") == "summary":
            continue
        groups.setdefault(m.group("name"), []).append((m.group("value"), row.error_pct))
    return groups


def write_xy_file(path, pairs: list[tuple[float, float]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,error_pct\n")
        for x, err in sorted(pairs):
            fh.write(f"{x:g},{err:.4f}\n")


def render_sweep_figure(path, name: str, pairs: list[tuple[float, float]]) -> None:
    xs = [p[0] for p in sorted(pairs)]
    ys = [p[1] for p in sorted(pairs)]
    fig, ax = plt.subplots(figsize=(5.2, 3.4))
    ax.plot(xs, ys, marker="o")
    if min(xs) > 0 and max(xs) / max(min(xs), 1e-12) > 50:
        ax.set_xscale("log")
    ax.set_xlabel(name)
    ax.set_ylabel("error (%)")
    ax.set_title(f"{name} sweep")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_overview_figure(path, rows: list[ResultRow]) -> None:
    overall = [(r.run, r.error_pct) for r in rows if r.domain == "overall"]
    if not overall:
        return
    labels = [name for name, _ in overall]
    values = [err for _, err in overall]
    fig, ax = plt.subplots(figsize=(max(5.0, 0.55 * len(labels) + 2.0), 3.6))
    ax.bar(range(len(values)), values, color="#4878a8")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("error (%)")
    ax.set_title("overall online error by run")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def build_report(csv_paths: list[str | Path], out_dir: str | Path) -> list[Path]:
    """Merged table + per-sweep xy files and figures; returns written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = merge_results(csv_paths)
    written = []
    merged_path = out_dir / "combined.csv"
    write_results_csv(merged_path, rows)
    written.append(merged_path)
    render_overview_figure(out_dir / "overview.png", rows)
    written.append(out_dir / "overview.png")
    for name, entries in sweep_groups(rows).items():
        numeric = [(x, err) for raw, err in entries if (x := _numeric(raw)) is not None]
        if len(numeric) < 2:
            continue
        xy_path = out_dir / f"{name}_sweep.csv"
        write_xy_file(xy_path, numeric)
        written.append(xy_path)
        fig_path = out_dir / f"{name}_sweep.png"
        render_sweep_figure(fig_path, name, numeric)
        written.append(fig_path)
    return written
