"""Shared fixtures: scripted gateways, toy questions, and agent rule builders."""

from __future__ import annotations

import json

import pytest

from neuroagent import (
    BackendConfig,
    ChunkingConfig,
    Gateway,
    MockRule,
    MockScript,
    Question,
    TranscriptLog,
    build_index,
    chunk_document,
)


def make_gateway(rules=(), dimension=32, seed=0, transcript=None) -> Gateway:
    script = MockScript(rules=tuple(rules), embed_seed=seed, embed_dimension=dimension)
    return Gateway(
        BackendConfig(kind="mock"),
        script=script,
        transcript=transcript if transcript is not None else TranscriptLog(),
    )


def make_question(qid="q1", n_options=4, correct=1, exam="exam1", **kwargs) -> Question:
    options = tuple(f"option {letter}{qid}" for letter in "abcdef"[:n_options])
    return Question(
        id=qid,
        exam_id=exam,
        stem=f"Clinical scenario for {qid}: a patient presents with progressive weakness.",
        options=options,
        correct_index=correct,
        **kwargs,
    )


def synth_answer_json(choice: int, n_options: int = 4, cited=()) -> str:
    assessments = [
        {
            "option_index": i,
            "verdict": "supported" if i == choice else "contradicted",
            "note": "evidence weighed",
        }
        for i in range(n_options)
    ]
    return json.dumps(
        {"choice_index": choice, "option_assessments": assessments, "cited_evidence": list(cited)}
    )


def classifier_rule(qid: str, level: int = 1) -> MockRule:
    return MockRule(
        f"*complexity classifier*question id: {qid}*",
        json.dumps({"rc_level": level, "rationale": "scripted"}),
    )


def interpreter_rule(qid: str, queries=("weakness differential",), concept="presenting syndrome") -> MockRule:
    body = {
        "concepts": [{"name": concept, "clinical_elements": ["weakness"]}],
        "queries": [{"concept": concept, "query": q} for q in queries],
    }
    return MockRule(f"*question interpreter*question id: {qid}*", json.dumps(body))


def synthesizer_rule(qid: str, choice: int, n_options: int = 4, cited=()) -> MockRule:
    return MockRule(
        f"*commit to exactly one answer*question id: {qid}*",
        synth_answer_json(choice, n_options, cited),
    )


def notes_rule() -> MockRule:
    return MockRule("*Record what this batch contributes*", json.dumps({"notes": "accumulating"}))


def validator_rule(qid: str, decision: str = "approve", cycle: int | None = None, hints=("narrow the differential",)) -> MockRule:
    pattern = f"*final quality gate*question id: {qid}*"
    if cycle is not None:
        pattern += f"cycle: {cycle}*"
    body: dict = {"decision": decision, "reasons": ["scripted verdict"]}
    if decision == "revise":
        body["refinement_hints"] = list(hints)
    return MockRule(pattern, json.dumps(body))


def approving_agent_rules(qid: str, choice: int, n_options: int = 4, level: int = 1, cited=()) -> list[MockRule]:
    return [
        classifier_rule(qid, level),
        interpreter_rule(qid),
        notes_rule(),
        synthesizer_rule(qid, choice, n_options, cited),
        validator_rule(qid, "approve"),
    ]


def base_answer_rule(qid: str, letter: str) -> MockRule:
    return MockRule(
        f"*Answer the multiple-choice clinical question*question id: {qid}*",
        json.dumps({"answer": letter}),
    )


def rag_answer_rule(qid: str, letter: str) -> MockRule:
    return MockRule(
        f"*reference passages*question id: {qid}*",
        json.dumps({"answer": letter}),
    )


@pytest.fixture
def toy_index():
    """Ten-chunk index over three synthetic documents, mock embeddings."""
    gateway = make_gateway(dimension=24, seed=5)
    cfg = ChunkingConfig(chunk_tokens=32, overlap_tokens=8)
    chunks = []
    for doc_id, n_tokens in (("a.txt", 80), ("b.txt", 80), ("c.txt", 104)):
        text = " ".join(f"{doc_id[0]}tok{i:03d}" for i in range(n_tokens))
        chunks.extend(chunk_document(doc_id, text, cfg))
    assert len(chunks) == 10
    return build_index(chunks, gateway.embed)
