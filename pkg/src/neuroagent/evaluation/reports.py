"""Report files: metrics.json, breakdown CSVs, comparisons.json, report.md.

Output is deterministic byte-for-byte for identical inputs: keys are
sorted, reals carry six significant digits, CSV rows use RFC-4180
quoting.  Every metrics block includes the 65% pass-threshold flag.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from ..errors import IoFailure
from ..util import sig6
from .runner import PASS_THRESHOLD, BreakdownTable, ComparisonReport, CorrelationMatrix, MetricsRecord

FORMATS = ("json", "csv", "markdown")


def metrics_to_json(metrics: MetricsRecord, mode: str | None = None) -> dict:
    record = {
        "n": metrics.n,
        "n_correct": metrics.n_correct,
        "accuracy": sig6(metrics.accuracy),
        "f1": sig6(metrics.f1),
        "passing": metrics.passing,
        "pass_threshold": PASS_THRESHOLD,
    }
    if mode is not None:
        record["mode"] = mode
    return record


def correlations_to_json(matrix: CorrelationMatrix) -> dict:
    return {
        "n": matrix.n,
        "pairs": {
            f"{a}-{b}": (sig6(r) if r is not None else None) for (a, b), r in sorted(matrix.pairs.items())
        },
    }


def emit_report(
    metrics: MetricsRecord,
    breakdowns: list[BreakdownTable],
    comparisons: list[ComparisonReport],
    fmt: str,
    out_dir: Path,
    mode: str | None = None,
    correlations: CorrelationMatrix | None = None,
) -> list[Path]:
    """Write the report files for one format; returns the written paths."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            return _emit_json(metrics, breakdowns, comparisons, out_dir, mode, correlations)
        if fmt == "csv":
            return _emit_csv(breakdowns, out_dir)
        return [_emit_markdown(metrics, breakdowns, comparisons, out_dir, mode, correlations)]
    except OSError as exc:
        raise IoFailure(f"cannot write report under {out_dir}: {exc}") from exc


def _emit_json(metrics, breakdowns, comparisons, out_dir, mode, correlations) -> list[Path]:
    written = []
    metrics_path = out_dir / "metrics.json"
    _write_json(metrics_path, metrics_to_json(metrics, mode))
    written.append(metrics_path)
    comparisons_path = out_dir / "comparisons.json"
    _write_json(comparisons_path, [_comparison_json(c) for c in comparisons])
    written.append(comparisons_path)
    for table in breakdowns:
        path = out_dir / f"breakdown_{table.key}.json"
        _write_json(path, _breakdown_json(table))
        written.append(path)
    if correlations is not None:
        path = out_dir / "correlations.json"
        _write_json(path, correlations_to_json(correlations))
        written.append(path)
    return written


def _emit_csv(breakdowns, out_dir) -> list[Path]:
    written = []
    for table in breakdowns:
        path = out_dir / f"breakdown_{table.key}.csv"
        buffer = io.StringIO()
        writer = csv.writer(buffer, quoting=csv.QUOTE_MINIMAL)
        writer.writerow(["group", "n", "n_correct", "accuracy", "f1", "passing"])
        for label, record in table.groups.items():
            writer.writerow(
                [label, record.n, record.n_correct, sig6(record.accuracy), sig6(record.f1), record.passing]
            )
        if table.unlabeled:
            writer.writerow(["(unlabeled)", table.unlabeled, "", "", "", ""])
        path.write_text(buffer.getvalue(), encoding="utf-8", newline="")
        written.append(path)
    return written


def _emit_markdown(metrics, breakdowns, comparisons, out_dir, mode, correlations) -> Path:
    lines = ["# evaluation report", ""]
    if mode is not None:
        lines += [f"mode: `{mode}`", ""]
    lines += [
        "## metrics",
        "",
        "| n | correct | accuracy | f1 | passing (>= 65%) |",
        "| - | - | - | - | - |",
        f"| {metrics.n} | {metrics.n_correct} | {sig6(metrics.accuracy)} | {sig6(metrics.f1)} | {metrics.passing} |",
        "",
    ]
    for table in breakdowns:
        lines += [
            f"## breakdown: {table.key}",
            "",
            f"labeled: {table.labeled}, unlabeled: {table.unlabeled}",
            "",
            "| group | n | correct | accuracy | f1 | passing |",
            "| - | - | - | - | - | - |",
        ]
        for label, record in table.groups.items():
            lines.append(
                f"| {label} | {record.n} | {record.n_correct} | {sig6(record.accuracy)} | {sig6(record.f1)} | {record.passing} |"
            )
        lines.append("")
    if comparisons:
        lines += [
            "## comparisons",
            "",
            "| a | b | a correct/n | b correct/n | p | significant |",
            "| - | - | - | - | - | - |",
        ]
        for c in comparisons:
            (ac, ai), (bc, bi) = c.table
            lines.append(
                f"| {c.label_a} | {c.label_b} | {ac}/{ac + ai} | {bc}/{bc + bi} | {sig6(c.p_value)} | {c.significant} |"
            )
        lines.append("")
    if correlations is not None:
        lines += ["## complexity correlations", "", f"n = {correlations.n}", "", "| pair | r |", "| - | - |"]
        for (a, b), r in sorted(correlations.pairs.items()):
            lines.append(f"| {a}-{b} | {sig6(r) if r is not None else 'n/a'} |")
        lines.append("")
    path = out_dir / "report.md"
    path.write_text("\n".join(lines), encoding="utf-8")
    return path


def _breakdown_json(table: BreakdownTable) -> dict:
    return {
        "key": table.key,
        "labeled": table.labeled,
        "unlabeled": table.unlabeled,
        "groups": {label: metrics_to_json(record) for label, record in table.groups.items()},
    }


def _comparison_json(report: ComparisonReport) -> dict:
    body = report.to_json()
    body["p_value"] = sig6(body["p_value"])
    return body


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=1) + "\n", encoding="utf-8")
