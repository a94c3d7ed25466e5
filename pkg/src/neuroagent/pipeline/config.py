"""Pipeline run configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..gateway import SamplingParams


@dataclass(frozen=True)
class RetrievalBudget:
    """How hard one complexity level searches the knowledge base."""

    queries_per_concept: int
    top_k: int
    rounds: int

    def __post_init__(self):
        if min(self.queries_per_concept, self.top_k, self.rounds) < 1:
            raise ValueError("retrieval budget values must be positive")


def default_budgets() -> dict[int, RetrievalBudget]:
    # level 1 questions get a light single-round search, level 3 the widest
    return {
        1: RetrievalBudget(queries_per_concept=1, top_k=3, rounds=1),
        2: RetrievalBudget(queries_per_concept=1, top_k=5, rounds=2),
        3: RetrievalBudget(queries_per_concept=2, top_k=5, rounds=2),
    }


@dataclass(frozen=True)
class PipelineConfig:
    max_validation_cycles: int = 2
    budgets: dict[int, RetrievalBudget] = field(default_factory=default_budgets)
    read_chunk_tokens: int = 1024
    json_repair_retries: int = 2
    sampling: SamplingParams = SamplingParams()

    def __post_init__(self):
        if self.max_validation_cycles < 1:
            raise ValueError("max_validation_cycles must be >= 1")
        if self.read_chunk_tokens < 1:
            raise ValueError("read_chunk_tokens must be >= 1")
        if self.json_repair_retries < 0:
            raise ValueError("json_repair_retries must be >= 0")
        if set(self.budgets) != {1, 2, 3}:
            raise ValueError("budgets must cover complexity levels 1, 2 and 3")
