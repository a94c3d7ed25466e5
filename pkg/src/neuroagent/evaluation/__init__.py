"""Evaluation harness: choice extraction, statistics, runs, and reports."""

from .answers import extract_choice
from .reports import correlations_to_json, emit_report, metrics_to_json
from .runner import (
    ALPHA,
    BREAKDOWN_KEYS,
    MODES,
    PASS_THRESHOLD,
    BreakdownTable,
    ComparisonReport,
    CorrelationMatrix,
    EvalResult,
    MetricsRecord,
    RunMode,
    accuracy,
    breakdown,
    compare_methods,
    correlations,
    run_evaluation,
)
from .stats import (
    counts_from_percentage,
    f1_from_accuracy,
    fisher_exact_two_sided,
    pearson,
)

__all__ = [
    "extract_choice",
    "emit_report",
    "metrics_to_json",
    "correlations_to_json",
    "RunMode",
    "EvalResult",
    "MetricsRecord",
    "ComparisonReport",
    "CorrelationMatrix",
    "BreakdownTable",
    "run_evaluation",
    "accuracy",
    "compare_methods",
    "breakdown",
    "correlations",
    "counts_from_percentage",
    "f1_from_accuracy",
    "fisher_exact_two_sided",
    "pearson",
    "MODES",
    "BREAKDOWN_KEYS",
    "PASS_THRESHOLD",
    "ALPHA",
]
