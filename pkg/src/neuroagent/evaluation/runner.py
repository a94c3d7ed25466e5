"""Running base / RAG / agentic evaluations and aggregating their metrics.

Base mode prompts with the bare question, RAG mode prepends the top-k
chunks retrieved for the question stem, agentic mode hands the question
to the five-agent pipeline.  Every question produces exactly one result;
per-question failures are recorded in the result rather than aborting
the run, so denominators always equal the dataset size.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .. import knowledge
from ..benchmark import Dataset, Question
from ..errors import EmptyResults, NeuroagentError, NoLabeledQuestions, ZeroVariance
from ..gateway import ChatMessage, ChatRequest, Gateway
from ..knowledge import VectorIndex
from ..pipeline import PipelineConfig, Workspace, question_block, render_template, run_pipeline
from .answers import extract_choice
from .stats import accuracy as _fraction_correct
from .stats import f1_from_accuracy, fisher_exact_two_sided, pearson

MODES = ("base", "rag", "agentic")
PASS_THRESHOLD = 0.65
ALPHA = 0.05

COMPLEXITY_DIMENSIONS = ("fkd", "cci", "rc")
BREAKDOWN_KEYS = ("subspecialty", "exam") + COMPLEXITY_DIMENSIONS


@dataclass(frozen=True)
class RunMode:
    kind: str
    top_k: int = 5

    def __post_init__(self):
        if self.kind not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.kind!r}")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class EvalResult:
    question_id: str
    predicted_index: int | None
    correct: bool
    mode: str
    trace_ref: str | None = None
    latency: float = 0.0
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "question_id": self.question_id,
            "predicted_index": self.predicted_index,
            "correct": self.correct,
            "mode": self.mode,
            "trace_ref": self.trace_ref,
            "latency": self.latency,
            "error": self.error,
        }

    @classmethod
    def from_json(cls, record: dict) -> "EvalResult":
        return cls(
            question_id=record["question_id"],
            predicted_index=record["predicted_index"],
            correct=record["correct"],
            mode=record["mode"],
            trace_ref=record.get("trace_ref"),
            latency=record.get("latency", 0.0),
            error=record.get("error"),
        )


@dataclass(frozen=True)
class MetricsRecord:
    n: int
    n_correct: int
    accuracy: float
    f1: float

    @classmethod
    def from_counts(cls, n: int, n_correct: int) -> "MetricsRecord":
        if n <= 0:
            raise EmptyResults("metrics over zero results")
        acc = n_correct / n
        return cls(n=n, n_correct=n_correct, accuracy=acc, f1=f1_from_accuracy(acc))

    @classmethod
    def from_results(cls, results: list[EvalResult]) -> "MetricsRecord":
        return cls.from_counts(len(results), sum(1 for r in results if r.correct))

    @property
    def passing(self) -> bool:
        return self.accuracy >= PASS_THRESHOLD


@dataclass(frozen=True)
class ComparisonReport:
    label_a: str
    label_b: str
    table: tuple[tuple[int, int], tuple[int, int]]  # rows: (correct, incorrect) per method
    p_value: float
    significant: bool

    def to_json(self) -> dict:
        return {
            "a": self.label_a,
            "b": self.label_b,
            "table": [list(self.table[0]), list(self.table[1])],
            "p_value": self.p_value,
            "significant": self.significant,
            "alpha": ALPHA,
        }


@dataclass(frozen=True)
class BreakdownTable:
    key: str
    groups: dict[str, MetricsRecord]
    labeled: int
    unlabeled: int


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pairwise correlations of the three complexity dimensions.

    A pair whose samples are constant carries None instead of a
    coefficient; ``n`` is the number of labeled questions used.
    """

    n: int
    pairs: dict[tuple[str, str], float | None]

    def r(self, dim_a: str, dim_b: str) -> float | None:
        if (dim_a, dim_b) in self.pairs:
            return self.pairs[(dim_a, dim_b)]
        return self.pairs[(dim_b, dim_a)]


# -- evaluation ---------------------------------------------------------------


def run_evaluation(
    dataset: Dataset,
    mode: RunMode,
    gateway: Gateway,
    cfg: PipelineConfig,
    index: VectorIndex | None = None,
    parallelism: int = 1,
    workspace_dir: Path | None = None,
    run_id: str = "run",
) -> list[EvalResult]:
    """Evaluate every question in the dataset under one mode.

    Results come back in dataset order, one per question.  rag and
    agentic modes require an index; agentic runs get disjoint workspaces
    under workspace_dir.
    """
    if mode.kind in ("rag", "agentic") and index is None:
        raise ValueError(f"{mode.kind} mode requires a vector index")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if mode.kind == "agentic" and workspace_dir is None:
        workspace_dir = Path("workspaces")

    def one(question: Question) -> EvalResult:
        start = time.perf_counter()
        trace_ref = None
        error = None
        predicted = None
        try:
            if mode.kind == "base":
                predicted = _answer_plain(question, gateway, cfg, context=None)
            elif mode.kind == "rag":
                hits = knowledge.retrieve(index, question.stem, gateway.embed, mode.top_k)
                context = "\n\n".join(hit.chunk.text for hit in hits)
                predicted = _answer_plain(question, gateway, cfg, context=context)
            else:
                ws = Workspace.create(workspace_dir, question.id, run_id)
                predicted, _trace = run_pipeline(question, index, gateway, cfg, workspace=ws)
                trace_ref = str(ws.root / "trace.json")
        except NeuroagentError as exc:
            error = f"{type(exc).__name__}: {exc}"
        return EvalResult(
            question_id=question.id,
            predicted_index=predicted,
            correct=predicted == question.correct_index,
            mode=mode.kind,
            trace_ref=trace_ref,
            latency=time.perf_counter() - start,
            error=error,
        )

    if parallelism == 1:
        return [one(q) for q in dataset.questions]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, dataset.questions))


def _answer_plain(question: Question, gateway: Gateway, cfg: PipelineConfig, context: str | None) -> int | None:
    if context is None:
        prompt = render_template(
            "base_answer.txt",
            question_id=question.id,
            question_block=question_block(question),
        )
    else:
        prompt = render_template(
            "rag_answer.txt",
            question_id=question.id,
            question_block=question_block(question),
            context_block=context,
        )
    request = ChatRequest(
        model_id=gateway.backend.chat_model,
        messages=(ChatMessage("user", prompt),),
        sampling=cfg.sampling,
    )
    completion = gateway.complete(request)
    return extract_choice(completion.text, len(question.options))


# -- comparisons & breakdowns ----------------------------------------------------


def accuracy(results: list[EvalResult]) -> float:
    """Fraction of correct results; Invalid predictions count as incorrect."""
    return _fraction_correct([r.correct for r in results])


def compare_methods(
    a: list[EvalResult],
    b: list[EvalResult],
    label_a: str = "a",
    label_b: str = "b",
) -> ComparisonReport:
    """Fisher-exact comparison of two methods' correct/incorrect counts."""
    if not a or not b:
        raise EmptyResults("comparison over an empty result list")
    a_correct = sum(1 for r in a if r.correct)
    b_correct = sum(1 for r in b if r.correct)
    table = ((a_correct, len(a) - a_correct), (b_correct, len(b) - b_correct))
    p = fisher_exact_two_sided([list(table[0]), list(table[1])])
    return ComparisonReport(
        label_a=label_a,
        label_b=label_b,
        table=table,
        p_value=p,
        significant=p < ALPHA,
    )


def breakdown(results: list[EvalResult], dataset: Dataset, key: str) -> BreakdownTable:
    """Per-group metrics under one grouping key.

    Keys: "subspecialty", "exam", or a complexity dimension ("fkd",
    "cci", "rc").  Questions without the label are skipped and counted
    as coverage; group sizes always sum to the labeled total.
    """
    if key not in BREAKDOWN_KEYS:
        raise ValueError(f"unknown breakdown key {key!r}; expected one of {BREAKDOWN_KEYS}")
    questions = dataset.by_id()
    counts: dict[str, list[int]] = {}
    labeled = 0
    unlabeled = 0
    for result in results:
        question = questions.get(result.question_id)
        if question is None:
            continue
        label = _group_label(question, key)
        if label is None:
            unlabeled += 1
            continue
        labeled += 1
        bucket = counts.setdefault(label, [0, 0])
        bucket[0] += 1
        bucket[1] += 1 if result.correct else 0
    if labeled == 0:
        raise NoLabeledQuestions(f"no question carries a {key!r} label")
    groups = {
        label: MetricsRecord.from_counts(n, n_correct)
        for label, (n, n_correct) in sorted(counts.items())
    }
    return BreakdownTable(key=key, groups=groups, labeled=labeled, unlabeled=unlabeled)


def _group_label(question: Question, key: str) -> str | None:
    if key == "subspecialty":
        return question.subspecialty.value if question.subspecialty else None
    if key == "exam":
        return question.exam_id
    if question.complexity is None:
        return None
    return f"L{getattr(question.complexity, key)}"


def correlations(dataset: Dataset) -> CorrelationMatrix:
    """Pairwise Pearson r over the integer complexity levels.

    Computed on the labeled subset; a constant dimension yields None for
    its pairs rather than failing the whole matrix.
    """
    labeled = [q.complexity for q in dataset.questions if q.complexity is not None]
    if len(labeled) < 2:
        raise NoLabeledQuestions("correlations need at least two labeled questions")
    series = {dim: [getattr(c, dim) for c in labeled] for dim in COMPLEXITY_DIMENSIONS}
    pairs: dict[tuple[str, str], float | None] = {}
    for i, dim_a in enumerate(COMPLEXITY_DIMENSIONS):
        for dim_b in COMPLEXITY_DIMENSIONS[i + 1 :]:
            try:
                pairs[(dim_a, dim_b)] = pearson(series[dim_a], series[dim_b])
            except ZeroVariance:
                pairs[(dim_a, dim_b)] = None
    return CorrelationMatrix(n=len(labeled), pairs=pairs)
