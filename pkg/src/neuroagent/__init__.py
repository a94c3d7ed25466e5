"""Multi-agent clinical MCQ answering over a retrieval-augmented knowledge
base, with an evaluation harness for base / RAG / agentic comparisons."""

__version__ = "0.1.0"

from . import benchmark, evaluation, gateway, knowledge, pipeline
from .benchmark import (
    ComplexityProfile,
    Dataset,
    Question,
    Subspecialty,
    adapt_medqa,
    composite_score,
    parse_dataset,
    serialize_dataset,
)
from .gateway import (
    BackendConfig,
    ChatMessage,
    ChatRequest,
    Completion,
    Gateway,
    MockRule,
    MockScript,
    SamplingParams,
    TranscriptLog,
)
from .knowledge import (
    Chunk,
    ChunkingConfig,
    ScoredChunk,
    VectorIndex,
    build_index,
    chunk_document,
    count_tokens,
    open_index,
    persist_index,
    retrieve,
)
from .pipeline import PipelineConfig, PipelineTrace, Workspace, run_pipeline
from .settings import Settings, load_settings

__all__ = [
    "__version__",
    "benchmark",
    "gateway",
    "knowledge",
    "pipeline",
    "evaluation",
    "Question",
    "Dataset",
    "ComplexityProfile",
    "Subspecialty",
    "parse_dataset",
    "serialize_dataset",
    "adapt_medqa",
    "composite_score",
    "Gateway",
    "BackendConfig",
    "SamplingParams",
    "ChatMessage",
    "ChatRequest",
    "Completion",
    "MockScript",
    "MockRule",
    "TranscriptLog",
    "Chunk",
    "ChunkingConfig",
    "VectorIndex",
    "ScoredChunk",
    "count_tokens",
    "chunk_document",
    "build_index",
    "retrieve",
    "persist_index",
    "open_index",
    "PipelineConfig",
    "PipelineTrace",
    "Workspace",
    "run_pipeline",
    "Settings",
    "load_settings",
]
