"""Run traces: the auditable record of one pipeline execution."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any

from .schemas import SCHEMA_VERSION


@dataclass(frozen=True)
class TraceStep:
    agent: str
    request_digest: str
    output: Any
    error: str | None
    started_at: float
    finished_at: float

    def to_json(self, with_timestamps: bool = True) -> dict:
        record: dict = {
            "agent": self.agent,
            "request_digest": self.request_digest,
            "output": self.output,
            "error": self.error,
        }
        if with_timestamps:
            record["started_at"] = self.started_at
            record["finished_at"] = self.finished_at
        return record


@dataclass
class PipelineTrace:
    """Ordered step log for one question, plus the run's outcome."""

    question_id: str
    steps: list[TraceStep] = field(default_factory=list)
    cycle_count: int = 0
    termination: str | None = None  # "approved" | "forced_accept"
    final_choice_index: int | None = None

    def add_step(
        self,
        agent: str,
        request_digest: str,
        output: Any,
        error: str | None = None,
        started_at: float | None = None,
        finished_at: float | None = None,
    ) -> None:
        now = time.time()
        self.steps.append(
            TraceStep(
                agent=agent,
                request_digest=request_digest,
                output=output,
                error=error,
                started_at=started_at if started_at is not None else now,
                finished_at=finished_at if finished_at is not None else now,
            )
        )

    def agents(self) -> list[str]:
        return [step.agent for step in self.steps]

    def to_json(self, with_timestamps: bool = True) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "question_id": self.question_id,
            "cycle_count": self.cycle_count,
            "termination": self.termination,
            "final_choice_index": self.final_choice_index,
            "steps": [step.to_json(with_timestamps) for step in self.steps],
        }
