"""The controller: classify, interpret, retrieve, synthesize, validate.

One run is strictly sequential.  A revise verdict loops control back to
the interpreter with the validator's hints; the loop is bounded by
max_validation_cycles, after which the last synthesized answer is
emitted with termination reason ``forced_accept``.  Every step lands in
the trace, which is written to the workspace even when a run aborts.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

from ..errors import NeuroagentError
from ..gateway import Gateway
from ..knowledge import VectorIndex
from .agents import (
    classify_complexity,
    interpret_question,
    retrieve_evidence,
    synthesize_answer,
    validate_answer,
)
from .config import PipelineConfig
from .trace import PipelineTrace
from .workspace import Workspace


def run_pipeline(
    question,
    index: VectorIndex,
    gateway: Gateway,
    cfg: PipelineConfig,
    workspace: Workspace | None = None,
) -> tuple[int, PipelineTrace]:
    """Answer one question through the five-agent pipeline.

    Returns the final 0-based choice index and the full trace.  On an
    agent error the partial trace is written to the workspace and
    attached to the exception as ``exc.trace`` before it propagates.
    """
    ws = workspace if workspace is not None else Workspace(Path(tempfile.mkdtemp(prefix="neuroagent-run-")))
    trace = PipelineTrace(question_id=question.id)
    try:
        estimate = classify_complexity(question, gateway, cfg, trace)
        hints: tuple[str, ...] = ()
        answer = None
        cycle = 0
        while cycle < cfg.max_validation_cycles:
            cycle += 1
            trace.cycle_count = cycle
            record = interpret_question(
                question,
                hints,
                gateway,
                cfg,
                level=estimate.rc_level,
                revision=cycle - 1,
                trace=trace,
            )
            ws.save_json("concepts.json", _concepts_file(record))
            ws.save_json("queries.json", _queries_file(record))
            manifest = retrieve_evidence(record, index, ws, cfg, estimate.rc_level, gateway, trace)
            answer = synthesize_answer(question, record, manifest, ws, gateway, cfg, trace)
            verdict = validate_answer(
                question, answer, manifest, gateway, cfg, cycle=cycle, ws=ws, trace=trace
            )
            ws.save_json(f"verdict_{cycle}.json", verdict.to_json())
            if verdict.decision == "approve":
                trace.termination = "approved"
                break
            hints = verdict.refinement_hints
        else:
            trace.termination = "forced_accept"
        trace.final_choice_index = answer.choice_index
        ws.save_json("trace.json", trace.to_json())
        return answer.choice_index, trace
    except NeuroagentError as exc:
        ws.save_json("trace.json", trace.to_json())
        exc.trace = trace  # expose the partial trace to callers
        raise


def _concepts_file(record) -> dict:
    body = record.to_json()
    return {
        "schema_version": body["schema_version"],
        "revision": body["revision"],
        "concepts": body["concepts"],
    }


def _queries_file(record) -> dict:
    body = record.to_json()
    return {
        "schema_version": body["schema_version"],
        "revision": body["revision"],
        "queries": body["queries"],
    }
