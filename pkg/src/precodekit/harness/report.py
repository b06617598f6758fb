"""Report artifacts: CSV tables, grouped markdown and per-method plot data.

Markdown layout: one section per scenario headed
``## Scenario NN: <name> (<metric>, lower|higher is better)``, methods as
rows and SNR points as columns. Per column, the best mean is **bold** and
the second best is <u>underlined</u>. A trailing ``*`` marks cells whose
mean excludes infeasible realizations; a cell with no feasible
realization shows ``— (k/n)``.
"""

from __future__ import annotations

import csv
import math
import re
from pathlib import Path

from ..errors import PrecodingError
from ..scenarios import load_catalog
from .sweep import FeasibilityMatrix, MetricTable


class IoError(PrecodingError, OSError):
    """Report files could not be written."""


def _direction(metric: str) -> str:
    return "min" if metric == "total_power" else "max"


def ranking(values: dict[str, float], direction: str) -> list[str]:
    """Methods with a finite value, best first (ties keep input order)."""
    finite = [(m, v) for m, v in values.items() if not math.isnan(v)]
    sign = 1.0 if direction == "min" else -1.0
    return [m for m, _ in sorted(finite, key=lambda mv: sign * mv[1])]


def _snr_label(s: float) -> str:
    return f"{s:g} dB"


def markdown_table(table: MetricTable) -> str:
    catalog = load_catalog()
    out = []
    for sid in table.scenario_ids():
        rows = [r for r in table.rows if r.scenario_id == sid]
        metric = rows[0].metric
        direction = _direction(metric)
        name = catalog.entry(sid)["name"] if sid in catalog else f"scenario {sid}"
        better = "lower" if direction == "min" else "higher"
        out.append(f"## Scenario {sid:02d}: {name} ({metric}, {better} is better)\n")
        snrs = table.snrs(sid)
        methods = table.methods(sid)
        marks: dict[tuple[str, float], str] = {}
        for snr in snrs:
            order = ranking({m: table.cell(sid, m, snr).mean for m in methods}, direction)
            for rank, m in enumerate(order[:2]):
                marks[(m, snr)] = "best" if rank == 0 else "second"
        out.append("| Method | " + " | ".join(_snr_label(s) for s in snrs) + " |")
        out.append("|---|" + "---:|" * len(snrs))
        for m in methods:
            cells = []
            for snr in snrs:
                r = table.cell(sid, m, snr)
                if r.infeasible >= r.n:
                    cells.append(f"— ({r.infeasible}/{r.n})")
                    continue
                text = f"{r.mean:.4f}"
                if marks.get((m, snr)) == "best":
                    text = f"**{text}**"
                elif marks.get((m, snr)) == "second":
                    text = f"<u>{text}</u>"
                if r.infeasible:
                    text += "*"
                cells.append(text)
            out.append(f"| {m} | " + " | ".join(cells) + " |")
        out.append("")
    out.append("`*` mean over feasible realizations only; `— (k/n)`: all k of n infeasible.")
    return "\n".join(out) + "\n"


def markdown_matrix(matrix: FeasibilityMatrix) -> str:
    snrs = sorted({s for _, s in matrix.cells})
    methods = list(dict.fromkeys(m for m, _ in matrix.cells))
    lines = [f"## Feasibility rate, scenario {matrix.scenario_id:02d} (n = {matrix.n})\n",
             "| Method | " + " | ".join(_snr_label(s) for s in snrs) + " |",
             "|---|" + "---:|" * len(snrs)]
    for m in methods:
        lines.append(f"| {m} | " + " | ".join(f"{matrix.cells[(m, s)]:.2f}" for s in snrs) + " |")
    return "\n".join(lines) + "\n"


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


def emit_report(obj, fmt: str, out_dir: str | Path) -> list[Path]:
    """Write ``obj`` (MetricTable or FeasibilityMatrix) as ``fmt`` in
    {csv, markdown, plotdata}; returns the files written."""
    if isinstance(obj, MetricTable) and not obj.rows or (
            isinstance(obj, FeasibilityMatrix) and not obj.cells):
        raise ValueError("nothing to report")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if isinstance(obj, FeasibilityMatrix):
            return _emit_matrix(obj, fmt, out)
        if fmt == "csv":
            return [obj.write_csv(out / "metric_table.csv")]
        if fmt == "markdown":
            path = out / "metric_table.md"
            path.write_text(markdown_table(obj))
            return [path]
        if fmt == "plotdata":
            paths = []
            for sid in obj.scenario_ids():
                for m in obj.methods(sid):
                    path = out / f"plot_s{sid:02d}_{_safe(m)}.csv"
                    with path.open("w", newline="") as fh:
                        w = csv.writer(fh, lineterminator="\n")
                        w.writerow(["snr_db", "mean"])
                        for snr in obj.snrs(sid):
                            w.writerow([repr(snr), repr(obj.cell(sid, m, snr).mean)])
                    paths.append(path)
            return paths
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    raise ValueError(f"unknown report format {fmt!r}")


def _emit_matrix(matrix: FeasibilityMatrix, fmt: str, out: Path) -> list[Path]:
    if fmt == "csv":
        path = out / f"feasibility_s{matrix.scenario_id:02d}.csv"
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["scenario_id", "method", "snr_db", "rate"])
            for (m, s), rate in matrix.cells.items():
                w.writerow([matrix.scenario_id, m, repr(s), repr(rate)])
        return [path]
    if fmt == "markdown":
        path = out / f"feasibility_s{matrix.scenario_id:02d}.md"
        path.write_text(markdown_matrix(matrix))
        return [path]
    raise ValueError(f"format {fmt!r} does not apply to a feasibility matrix")
