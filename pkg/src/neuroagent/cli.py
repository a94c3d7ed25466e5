"""Command-line surface.

Subcommands: ingest (corpus to chunks), index (chunks to vector index),
run (evaluate a dataset in one mode), report (render run artifacts),
compare (Fisher test between two runs), validate-data (check a dataset
file).  One config file drives a run; rerunning with identical config,
dataset, index and a mock backend reproduces metrics.json byte for byte.

Exit codes: 0 ok, 1 usage, 2 data error, 3 backend/transport error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

from .benchmark import Dataset, parse_dataset, serialize_dataset
from .errors import (
    BackendError,
    IoFailure,
    NeuroagentError,
    NoLabeledQuestions,
    UnparseableAgentOutput,
    UsageError,
)
from .evaluation import (
    BreakdownTable,
    EvalResult,
    MetricsRecord,
    RunMode,
    breakdown,
    compare_methods,
    correlations,
    emit_report,
    metrics_to_json,
)
from .evaluation.runner import BREAKDOWN_KEYS, run_evaluation
from .gateway import TranscriptLog
from .knowledge import Chunk, build_index, chunk_corpus, open_index, persist_index
from .settings import Settings, load_settings
from .util import sha256_hex

PROG = "neuroagent"


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every run's artifacts."""

    run_id: str
    mode: str
    config_digest: str
    dataset_digest: str
    index_digest: str
    dataset_profile: str
    output_dir: str

    def to_json(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode,
            "config_digest": self.config_digest,
            "dataset_digest": self.dataset_digest,
            "index_digest": self.index_digest,
            "dataset_profile": self.dataset_profile,
            "output_dir": self.output_dir,
        }

    @classmethod
    def derive(cls, mode: str, config_digest: str, dataset_digest: str, index_digest: str, profile: str, out_dir: Path) -> "RunManifest":
        run_id = sha256_hex("|".join([mode, config_digest, dataset_digest, index_digest]))[:12]
        return cls(
            run_id=run_id,
            mode=mode,
            config_digest=config_digest,
            dataset_digest=dataset_digest,
            index_digest=index_digest,
            dataset_profile=profile,
            output_dir=str(out_dir),
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message, self.format_usage())


def build_parser() -> _Parser:
    parser = _Parser(prog=PROG, description="clinical MCQ evaluation: ingestion, indexing, agentic runs, reports")
    parser.add_argument("--json-errors", action="store_true", help="emit machine-readable error JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="chunk a corpus directory into a chunks file")
    p.add_argument("--corpus", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--config", type=Path, default=None)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="embed a chunks file into a vector index")
    p.add_argument("--chunks", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--config", type=Path, default=None)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("run", help="evaluate a dataset in one mode")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--mode", required=True, choices=["base", "rag", "agentic"])
    p.add_argument("--config", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--parallelism", type=int, default=None, help="worker count; overrides the config value (default 1)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="render reports from a run directory")
    p.add_argument("--run", required=True, type=Path)
    p.add_argument("--format", required=True, choices=["json", "csv", "markdown"])
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", help="Fisher exact comparison of two runs")
    p.add_argument("--run-a", required=True, type=Path)
    p.add_argument("--run-b", required=True, type=Path)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate-data", help="validate a dataset file against a profile")
    p.add_argument("--dataset", required=True, type=Path)
    p.add_argument("--profile", required=True, choices=["board", "generic"])
    p.set_defaults(func=cmd_validate_data)

    return parser


def dispatch(argv: list[str]) -> argparse.Namespace:
    """Parse argv into a command namespace; UsageError on any problem."""
    if not argv:
        raise UsageError("no command given", build_parser().format_usage())
    return build_parser().parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    try:
        args = dispatch(argv)
        args.func(args)
        return 0
    except UsageError as exc:
        _report_error(exc, json_errors)
        if exc.usage and not json_errors:
            print(exc.usage, file=sys.stderr, end="")
        return 1
    except (BackendError, UnparseableAgentOutput) as exc:
        _report_error(exc, json_errors)
        return 3
    except NeuroagentError as exc:
        _report_error(exc, json_errors)
        return 2


def _report_error(exc: Exception, json_errors: bool) -> None:
    if json_errors:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"{PROG}: error: {exc}", file=sys.stderr)


# -- commands ----------------------------------------------------------------


def _settings(path: Path | None) -> Settings:
    return load_settings(path) if path is not None else Settings()


def cmd_ingest(args) -> None:
    settings = _settings(args.config)
    if not args.corpus.is_dir():
        raise IoFailure(f"corpus directory {args.corpus} does not exist")
    chunks = chunk_corpus(args.corpus, settings.chunking)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(json.dumps(chunk.to_json(), ensure_ascii=False, sort_keys=True) + "\n")
    print(f"wrote {len(chunks)} chunks to {args.out}")


def cmd_index(args) -> None:
    settings = _settings(args.config)
    try:
        lines = args.chunks.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read chunks file {args.chunks}: {exc}") from exc
    chunks = [Chunk.from_json(json.loads(line)) for line in lines if line.strip()]
    gateway = settings.make_gateway()
    index = build_index(chunks, gateway.embed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    persist_index(index, args.out)
    print(f"indexed {len(index)} chunks (dimension {index.dimension}) into {args.out}")


def cmd_run(args) -> None:
    settings = load_settings(args.config)
    dataset = parse_dataset(args.dataset, settings.dataset_profile, name=args.dataset.stem)
    mode = RunMode(args.mode, top_k=settings.rag_top_k)
    index = None
    index_digest = "-"
    if mode.kind in ("rag", "agentic"):
        if settings.index_path is None:
            raise IoFailure(f"config {args.config} sets no index_path but mode {mode.kind} needs one")
        index = open_index(settings.index_path)
        index_digest = index.corpus_digest

    out_dir = args.out
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest.derive(
        mode.kind, settings.digest, dataset.digest(), index_digest, settings.dataset_profile, out_dir
    )
    gateway = settings.make_gateway(TranscriptLog(out_dir / "transcript.jsonl"))
    parallelism = args.parallelism if args.parallelism is not None else settings.parallelism
    results = run_evaluation(
        dataset,
        mode,
        gateway,
        settings.pipeline,
        index=index,
        parallelism=parallelism,
        workspace_dir=out_dir / "workspaces",
        run_id=manifest.run_id,
    )
    _write_run_artifacts(out_dir, manifest, dataset, results, mode.kind)
    metrics = MetricsRecord.from_results(results)
    print(f"{mode.kind}: {metrics.n_correct}/{metrics.n} correct, accuracy {metrics.accuracy:.4f}")


def _write_run_artifacts(out_dir: Path, manifest: RunManifest, dataset: Dataset, results: list[EvalResult], mode: str) -> None:
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest.to_json(), sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    (out_dir / "dataset.jsonl").write_bytes(serialize_dataset(dataset))
    with (out_dir / "results.jsonl").open("w", encoding="utf-8") as fh:
        for result in results:
            fh.write(json.dumps(result.to_json(), sort_keys=True) + "\n")
    metrics = MetricsRecord.from_results(results)
    (out_dir / "metrics.json").write_text(
        json.dumps(metrics_to_json(metrics, mode), sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )


def _read_run(run_dir: Path) -> tuple[RunManifest, Dataset, list[EvalResult]]:
    manifest_path = run_dir / "run_manifest.json"
    if not manifest_path.is_file():
        raise IoFailure(f"{run_dir} is not a run directory (no run_manifest.json)")
    raw = json.loads(manifest_path.read_text(encoding="utf-8"))
    manifest = RunManifest(**raw)
    dataset = parse_dataset(run_dir / "dataset.jsonl", "generic", name=run_dir.name)
    results = [
        EvalResult.from_json(json.loads(line))
        for line in (run_dir / "results.jsonl").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    return manifest, dataset, results


def cmd_report(args) -> None:
    manifest, dataset, results = _read_run(args.run)
    metrics = MetricsRecord.from_results(results)
    breakdowns: list[BreakdownTable] = []
    for key in BREAKDOWN_KEYS:
        try:
            breakdowns.append(breakdown(results, dataset, key))
        except NoLabeledQuestions:
            continue
    try:
        matrix = correlations(dataset)
    except NoLabeledQuestions:
        matrix = None
    written = emit_report(
        metrics, breakdowns, [], args.format, args.run, mode=manifest.mode, correlations=matrix
    )
    for path in written:
        print(f"wrote {path}")


def cmd_compare(args) -> None:
    manifest_a, _, results_a = _read_run(args.run_a)
    manifest_b, _, results_b = _read_run(args.run_b)
    report = compare_methods(
        results_a, results_b, label_a=f"{manifest_a.mode}:{manifest_a.run_id}", label_b=f"{manifest_b.mode}:{manifest_b.run_id}"
    )
    body = report.to_json()
    print(json.dumps(body, sort_keys=True, indent=1))
    comparisons_path = args.run_a / "comparisons.json"
    comparisons_path.write_text(json.dumps([body], sort_keys=True, indent=1) + "\n", encoding="utf-8")


def cmd_validate_data(args) -> None:
    dataset = parse_dataset(args.dataset, args.profile, name=args.dataset.stem)
    labeled = sum(1 for q in dataset.questions if q.complexity is not None)
    print(f"ok: {len(dataset)} questions ({args.profile} profile), {labeled} with complexity labels")


if __name__ == "__main__":
    sys.exit(main())
