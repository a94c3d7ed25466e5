"""Five-agent reasoning pipeline with a file workspace and bounded revision loop."""

from .agents import (
    classify_complexity,
    interpret_question,
    question_block,
    render_template,
    retrieve_evidence,
    synthesize_answer,
    validate_answer,
)
from .config import PipelineConfig, RetrievalBudget, default_budgets
from .runner import run_pipeline
from .schemas import (
    SCHEMA_VERSION,
    ComplexityEstimate,
    Concept,
    EvidenceItem,
    EvidenceManifest,
    InterpretationRecord,
    OptionAssessment,
    QueryEvidence,
    RoundEvidence,
    SchemaViolation,
    SearchQuery,
    SynthesizedAnswer,
    Verdict,
)
from .trace import PipelineTrace, TraceStep
from .workspace import Workspace

__all__ = [
    "PipelineConfig",
    "RetrievalBudget",
    "default_budgets",
    "run_pipeline",
    "classify_complexity",
    "interpret_question",
    "retrieve_evidence",
    "synthesize_answer",
    "validate_answer",
    "question_block",
    "render_template",
    "Workspace",
    "PipelineTrace",
    "TraceStep",
    "SCHEMA_VERSION",
    "ComplexityEstimate",
    "Concept",
    "SearchQuery",
    "InterpretationRecord",
    "EvidenceItem",
    "EvidenceManifest",
    "QueryEvidence",
    "RoundEvidence",
    "OptionAssessment",
    "SynthesizedAnswer",
    "Verdict",
    "SchemaViolation",
]
