"""Agent operations and the bounded classify-interpret-retrieve-synthesize-validate loop."""

import json

import numpy as np
import pytest

from neuroagent import MockRule, VectorIndex, Workspace, run_pipeline
from neuroagent.errors import EmptyCorpus, UnparseableAgentOutput, WorkspaceNotFound
from neuroagent.pipeline import (
    EvidenceManifest,
    PipelineConfig,
    PipelineTrace,
    RetrievalBudget,
    classify_complexity,
    interpret_question,
    retrieve_evidence,
    synthesize_answer,
    validate_answer,
)
from neuroagent.pipeline.schemas import InterpretationRecord, Concept, SearchQuery

from conftest import (
    approving_agent_rules,
    classifier_rule,
    interpreter_rule,
    make_gateway,
    make_question,
    notes_rule,
    synth_answer_json,
    synthesizer_rule,
    validator_rule,
)

CFG = PipelineConfig()


@pytest.fixture
def ws(tmp_path):
    return Workspace(tmp_path / "ws")


def interpretation(queries=("weakness differential",), concept="presenting syndrome", revision=0):
    return InterpretationRecord(
        concepts=(Concept(name=concept, clinical_elements=("weakness",)),),
        queries=tuple(SearchQuery(concept=concept, query=q) for q in queries),
        revision=revision,
    )


class TestClassifier:
    def test_scripted_level(self):
        gw = make_gateway([classifier_rule("q1", level=1)])
        estimate = classify_complexity(make_question("q1"), gw, CFG)
        assert estimate.rc_level == 1

    def test_json_extracted_from_prose(self):
        gw = make_gateway(
            [MockRule("*classifier*", 'Sure! Here it is: {"rc_level": 2, "rationale": "x"} hope that helps')]
        )
        assert classify_complexity(make_question("q1"), gw, CFG).rc_level == 2

    def test_unparseable_after_retries(self):
        gw = make_gateway([MockRule("*", "no json here")])
        with pytest.raises(UnparseableAgentOutput):
            classify_complexity(make_question("q1"), gw, CFG)
        # one initial call plus each repair retry
        assert len(gw.transcript) == CFG.json_repair_retries + 1

    def test_repair_retry_succeeds(self):
        gw = make_gateway(
            [
                MockRule("*Your reply was invalid*", '{"rc_level": 3, "rationale": "fixed"}'),
                MockRule("*classifier*", '{"rc_level": 9, "rationale": "broken"}'),
            ]
        )
        estimate = classify_complexity(make_question("q1"), gw, CFG)
        assert estimate.rc_level == 3
        assert len(gw.transcript) == 2

    def test_out_of_range_level_is_schema_violation(self):
        gw = make_gateway([MockRule("*", '{"rc_level": 4}')])
        with pytest.raises(UnparseableAgentOutput):
            classify_complexity(make_question("q1"), gw, CFG)


class TestInterpreter:
    def test_concepts_and_queries(self):
        reply = {
            "concepts": [
                {"name": "c1", "clinical_elements": ["e1"]},
                {"name": "c2", "clinical_elements": []},
            ],
            "queries": [
                {"concept": "c1", "query": "first search"},
                {"concept": "c2", "query": "second search"},
            ],
        }
        gw = make_gateway([MockRule("*interpreter*", json.dumps(reply))])
        record = interpret_question(make_question("q1"), None, gw, CFG, level=2)
        assert record.revision == 0
        assert len(record.concepts) == 2
        assert len(record.queries) == 2

    def test_hints_reach_the_prompt(self):
        gw = make_gateway([interpreter_rule("q1")])
        record = interpret_question(
            make_question("q1"),
            ("focus on the cranial nerves",),
            gw,
            CFG,
            level=1,
            revision=1,
        )
        assert record.revision == 1
        prompt = gw.transcript.entries[0]["request"]["messages"][0]["content"]
        assert "focus on the cranial nerves" in prompt
        assert "revision: 1" in prompt

    def test_query_with_unknown_concept_rejected(self):
        reply = {
            "concepts": [{"name": "c1", "clinical_elements": []}],
            "queries": [{"concept": "ghost", "query": "dangling"}],
        }
        gw = make_gateway([MockRule("*", json.dumps(reply))])
        with pytest.raises(UnparseableAgentOutput):
            interpret_question(make_question("q1"), None, gw, CFG, level=1)

    def test_query_budget_truncates_per_concept(self):
        reply = {
            "concepts": [{"name": "c1", "clinical_elements": []}],
            "queries": [{"concept": "c1", "query": f"q{i}"} for i in range(5)],
        }
        gw = make_gateway([MockRule("*", json.dumps(reply))])
        record = interpret_question(make_question("q1"), None, gw, CFG, level=1)
        budget = CFG.budgets[1]
        assert len(record.queries) == budget.queries_per_concept
        assert record.queries[0].query == "q0"


class TestRetrieveEvidence:
    def test_l1_budget_file_arithmetic(self, toy_index, ws):
        gw = make_gateway(dimension=24, seed=5)
        record = interpretation(queries=("first topic", "second topic"))
        manifest = retrieve_evidence(record, toy_index, ws, CFG, level=1, gateway=gw)
        paths = manifest.all_paths()
        assert len(paths) == 6  # 2 queries x top_k 3 x 1 round
        for path in paths:
            assert ws.has_file(path)
        saved = json.loads(ws.read_whole(paths[0]))
        assert {"doc_id", "seq", "text", "score", "query", "round", "rank"} <= set(saved)

    def test_l3_rounds_deduplicate(self, toy_index, ws):
        gw = make_gateway(dimension=24, seed=5)
        record = interpretation(queries=("one deep topic",))
        manifest = retrieve_evidence(record, toy_index, ws, CFG, level=3, gateway=gw)
        paths = manifest.all_paths()
        assert len(paths) <= 10  # k=5, 2 rounds, duplicates skipped
        refs = [(json.loads(ws.read_whole(p))["doc_id"], json.loads(ws.read_whole(p))["seq"]) for p in paths]
        assert len(refs) == len(set(refs))

    def test_round_two_expands_query(self, toy_index, ws):
        gw = make_gateway(dimension=24, seed=5)
        record = interpretation(queries=("expansion probe",))
        retrieve_evidence(record, toy_index, ws, CFG, level=2, gateway=gw)
        embed_entries = [e for e in gw.transcript.entries if e["kind"] == "embedding"]
        assert len(embed_entries) == 2  # one per round

    def test_scores_sorted_descending_per_round(self, toy_index, ws):
        gw = make_gateway(dimension=24, seed=5)
        manifest = retrieve_evidence(interpretation(), toy_index, ws, CFG, level=1, gateway=gw)
        for query in manifest.queries:
            for rnd in query.rounds:
                scores = [item.score for item in rnd.items]
                assert scores == sorted(scores, reverse=True)

    def test_empty_index_fails_before_writes(self, ws):
        gw = make_gateway(dimension=8)
        empty = VectorIndex(dimension=8, chunks=(), vectors=np.zeros((0, 8)))
        with pytest.raises(EmptyCorpus):
            retrieve_evidence(interpretation(), empty, ws, CFG, level=1, gateway=gw)
        assert not any(name.startswith("evidence/") for name in ws.file_names())


class TestSynthesizer:
    def test_scripted_choice(self, toy_index, ws):
        gw = make_gateway([synthesizer_rule("q1", 2)], dimension=24, seed=5)
        manifest = retrieve_evidence(interpretation(), toy_index, ws, CFG, level=1, gateway=gw)
        answer = synthesize_answer(make_question("q1"), interpretation(), manifest, ws, gw, CFG)
        assert answer.choice_index == 2
        assert len(answer.assessments) == 4
        assert ws.has_file("synthesis.json")

    def test_empty_manifest_base_knowledge_fallback(self, ws):
        gw = make_gateway([synthesizer_rule("q1", 0)])
        answer = synthesize_answer(make_question("q1"), interpretation(), EvidenceManifest(), ws, gw, CFG)
        assert answer.choice_index == 0
        prompt = gw.transcript.entries[0]["request"]["messages"][0]["content"]
        assert "no retrieved evidence" in prompt

    def test_deleted_evidence_file_raises(self, toy_index, ws):
        gw = make_gateway([synthesizer_rule("q1", 1)], dimension=24, seed=5)
        manifest = retrieve_evidence(interpretation(), toy_index, ws, CFG, level=1, gateway=gw)
        victim = manifest.all_paths()[0]
        (ws.root / victim).unlink()
        with pytest.raises(WorkspaceNotFound):
            synthesize_answer(make_question("q1"), interpretation(), manifest, ws, gw, CFG)

    def test_many_files_take_multiple_calls(self, toy_index, ws):
        # 12 evidence files at ~36 tokens each against a 100-token call budget
        cfg = PipelineConfig(
            read_chunk_tokens=100,
            budgets={
                1: RetrievalBudget(1, 3, 1),
                2: RetrievalBudget(1, 5, 2),
                3: RetrievalBudget(2, 6, 1),
            },
        )
        gw = make_gateway([notes_rule(), synthesizer_rule("q1", 3)], dimension=24, seed=5)
        record = interpretation(queries=("topic alpha", "topic beta"))
        manifest = retrieve_evidence(record, toy_index, ws, cfg, level=3, gateway=gw)
        assert len(manifest.all_paths()) == 12
        trace = PipelineTrace("q1")
        answer = synthesize_answer(make_question("q1"), record, manifest, ws, gw, cfg, trace)
        assert answer.choice_index == 3
        synth_calls = [s for s in trace.steps if s.agent == "synthesize"]
        assert len(synth_calls) >= 2

    def test_cited_paths_must_exist_in_manifest(self, toy_index, ws):
        gw = make_gateway(
            [MockRule("*commit to exactly one answer*", synth_answer_json(1, cited=("evidence/bogus.json",)))],
            dimension=24,
            seed=5,
        )
        manifest = retrieve_evidence(interpretation(), toy_index, ws, CFG, level=1, gateway=gw)
        with pytest.raises(UnparseableAgentOutput):
            synthesize_answer(make_question("q1"), interpretation(), manifest, ws, gw, CFG)

    def test_missing_option_assessment_rejected(self, ws):
        incomplete = json.dumps(
            {
                "choice_index": 0,
                "option_assessments": [{"option_index": 0, "verdict": "supported", "note": ""}],
                "cited_evidence": [],
            }
        )
        gw = make_gateway([MockRule("*", incomplete)])
        with pytest.raises(UnparseableAgentOutput):
            synthesize_answer(make_question("q1"), interpretation(), EvidenceManifest(), ws, gw, CFG)


class TestValidator:
    def answer(self, cited=()):
        return json.loads(synth_answer_json(1, cited=cited))

    def parse_answer(self, cited=()):
        from neuroagent.pipeline.schemas import parse_synthesized_answer

        return parse_synthesized_answer(self.answer(cited), 4, set(cited))

    def test_approve(self):
        gw = make_gateway([validator_rule("q1", "approve")])
        verdict = validate_answer(make_question("q1"), self.parse_answer(), EvidenceManifest(), gw, CFG)
        assert verdict.decision == "approve"

    def test_revise_carries_hints(self):
        gw = make_gateway([validator_rule("q1", "revise", hints=("check the timeline",))])
        verdict = validate_answer(make_question("q1"), self.parse_answer(), EvidenceManifest(), gw, CFG)
        assert verdict.decision == "revise"
        assert verdict.refinement_hints == ("check the timeline",)

    def test_revise_without_hints_is_schema_violation(self):
        gw = make_gateway([MockRule("*", '{"decision": "revise", "reasons": ["r"], "refinement_hints": []}')])
        with pytest.raises(UnparseableAgentOutput):
            validate_answer(make_question("q1"), self.parse_answer(), EvidenceManifest(), gw, CFG)

    def test_approve_with_hints_is_schema_violation(self):
        gw = make_gateway([MockRule("*", '{"decision": "approve", "reasons": [], "refinement_hints": ["x"]}')])
        with pytest.raises(UnparseableAgentOutput):
            validate_answer(make_question("q1"), self.parse_answer(), EvidenceManifest(), gw, CFG)


class TestRunPipeline:
    def test_approve_first_cycle_five_steps(self, toy_index, tmp_path):
        gw = make_gateway(approving_agent_rules("q1", choice=1), dimension=24, seed=5)
        ws = Workspace(tmp_path / "q1")
        choice, trace = run_pipeline(make_question("q1"), toy_index, gw, CFG, workspace=ws)
        assert choice == 1
        assert trace.agents() == ["classify", "interpret", "retrieve", "synthesize", "validate"]
        assert trace.cycle_count == 1
        assert trace.termination == "approved"
        ws.validate_manifest()

    def test_revise_then_approve_interprets_twice(self, toy_index, tmp_path):
        rules = [
            classifier_rule("q2", 1),
            interpreter_rule("q2"),
            synthesizer_rule("q2", 0),
            validator_rule("q2", "approve", cycle=2),
            validator_rule("q2", "revise"),
        ]
        gw = make_gateway(rules, dimension=24, seed=5)
        ws = Workspace(tmp_path / "q2")
        choice, trace = run_pipeline(make_question("q2"), toy_index, gw, CFG, workspace=ws)
        assert choice == 0
        assert trace.agents().count("interpret") == 2
        assert trace.cycle_count == 2
        assert trace.termination == "approved"
        assert ws.has_file("verdict_1.json") and ws.has_file("verdict_2.json")

    def test_forced_accept_after_max_cycles(self, toy_index, tmp_path):
        rules = [
            classifier_rule("q3", 2),
            interpreter_rule("q3"),
            synthesizer_rule("q3", 2),
            validator_rule("q3", "revise"),
        ]
        gw = make_gateway(rules, dimension=24, seed=5)
        ws = Workspace(tmp_path / "q3")
        choice, trace = run_pipeline(make_question("q3"), toy_index, gw, CFG, workspace=ws)
        assert choice == 2  # the last synthesized answer is emitted
        assert trace.termination == "forced_accept"
        assert trace.cycle_count == CFG.max_validation_cycles == 2

    def test_termination_bound_holds_for_larger_budgets(self, toy_index, tmp_path):
        cfg = PipelineConfig(max_validation_cycles=4)
        rules = [
            classifier_rule("q3", 1),
            interpreter_rule("q3"),
            synthesizer_rule("q3", 2),
            validator_rule("q3", "revise"),
        ]
        gw = make_gateway(rules, dimension=24, seed=5)
        _, trace = run_pipeline(make_question("q3"), toy_index, gw, cfg, workspace=Workspace(tmp_path / "w"))
        assert trace.cycle_count == 4
        assert trace.agents().count("validate") == 4

    def test_deterministic_traces_across_runs(self, toy_index, tmp_path):
        question = make_question("q1")
        traces = []
        for run in ("one", "two"):
            gw = make_gateway(
                approving_agent_rules("q1", choice=1, cited=("evidence/0_1_0.json",)),
                dimension=24,
                seed=5,
            )
            ws = Workspace(tmp_path / run / "q1")
            _, trace = run_pipeline(question, toy_index, gw, CFG, workspace=ws)
            traces.append(json.dumps(trace.to_json(with_timestamps=False), sort_keys=True))
        assert traces[0] == traces[1]

    def test_cited_evidence_exists_in_workspace_manifest(self, toy_index, tmp_path):
        gw = make_gateway(
            approving_agent_rules("q1", choice=1, cited=("evidence/0_1_0.json",)),
            dimension=24,
            seed=5,
        )
        ws = Workspace(tmp_path / "q1")
        run_pipeline(make_question("q1"), toy_index, gw, CFG, workspace=ws)
        synthesis = json.loads(ws.read_whole("synthesis.json"))
        for cited in synthesis["cited_evidence"]:
            assert ws.has_file(cited)

    def test_abort_writes_partial_trace(self, toy_index, tmp_path):
        rules = [classifier_rule("q1", 1)]  # interpreter has no rule: abort there
        gw = make_gateway(rules, dimension=24, seed=5)
        ws = Workspace(tmp_path / "q1")
        with pytest.raises(Exception) as exc:
            run_pipeline(make_question("q1"), toy_index, gw, CFG, workspace=ws)
        trace = exc.value.trace
        assert trace.agents()[0] == "classify"
        assert ws.has_file("trace.json")
        saved = json.loads(ws.read_whole("trace.json"))
        assert saved["termination"] is None

    def test_workspace_layout(self, toy_index, tmp_path):
        gw = make_gateway(approving_agent_rules("q1", choice=1), dimension=24, seed=5)
        ws = Workspace(tmp_path / "q1")
        run_pipeline(make_question("q1"), toy_index, gw, CFG, workspace=ws)
        names = ws.file_names()
        assert {"concepts.json", "queries.json", "synthesis.json", "verdict_1.json", "trace.json"} <= names
        assert any(name.startswith("evidence/") for name in names)
        assert json.loads(ws.read_whole("concepts.json"))["schema_version"] == 1
