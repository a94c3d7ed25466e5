"""Typed agent messages and their validators.

Every agent reply must pass its schema before anything downstream sees
it; a reply that fails after all repair retries surfaces as
UnparseableAgentOutput.  Validators raise SchemaViolation with a message
suitable for feeding back to the model in a repair prompt.

Workspace copies of these records carry a schema_version field so traces
stay replayable across format changes.
"""

from __future__ import annotations

from dataclasses import dataclass

SCHEMA_VERSION = 1

VERDICTS = ("supported", "contradicted", "uncertain")
DECISIONS = ("approve", "revise")


class SchemaViolation(ValueError):
    """Agent reply parsed as JSON but does not satisfy its schema."""


@dataclass(frozen=True)
class ComplexityEstimate:
    rc_level: int
    rationale: str = ""

    def to_json(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "rc_level": self.rc_level, "rationale": self.rationale}


@dataclass(frozen=True)
class Concept:
    name: str
    clinical_elements: tuple[str, ...] = ()


@dataclass(frozen=True)
class SearchQuery:
    concept: str
    query: str


@dataclass(frozen=True)
class InterpretationRecord:
    concepts: tuple[Concept, ...]
    queries: tuple[SearchQuery, ...]
    revision: int = 0

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "revision": self.revision,
            "concepts": [
                {"name": c.name, "clinical_elements": list(c.clinical_elements)} for c in self.concepts
            ],
            "queries": [{"concept": q.concept, "query": q.query} for q in self.queries],
        }


@dataclass(frozen=True)
class EvidenceItem:
    path: str
    doc_id: str
    seq: int
    rank: int
    score: float


@dataclass(frozen=True)
class RoundEvidence:
    round: int
    items: tuple[EvidenceItem, ...]


@dataclass(frozen=True)
class QueryEvidence:
    query_index: int
    query: str
    rounds: tuple[RoundEvidence, ...]


@dataclass(frozen=True)
class EvidenceManifest:
    queries: tuple[QueryEvidence, ...] = ()

    def all_paths(self) -> list[str]:
        """Every saved evidence path, in query/round/rank order."""
        paths = []
        for query in self.queries:
            for rnd in query.rounds:
                for item in rnd.items:
                    paths.append(item.path)
        return paths

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "queries": [
                {
                    "query_index": q.query_index,
                    "query": q.query,
                    "rounds": [
                        {
                            "round": r.round,
                            "items": [
                                {
                                    "path": i.path,
                                    "doc_id": i.doc_id,
                                    "seq": i.seq,
                                    "rank": i.rank,
                                    "score": i.score,
                                }
                                for i in r.items
                            ],
                        }
                        for r in q.rounds
                    ],
                }
                for q in self.queries
            ],
        }


@dataclass(frozen=True)
class OptionAssessment:
    option_index: int
    verdict: str
    note: str = ""


@dataclass(frozen=True)
class SynthesizedAnswer:
    choice_index: int
    assessments: tuple[OptionAssessment, ...]
    cited_evidence: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "choice_index": self.choice_index,
            "option_assessments": [
                {"option_index": a.option_index, "verdict": a.verdict, "note": a.note}
                for a in self.assessments
            ],
            "cited_evidence": list(self.cited_evidence),
        }


@dataclass(frozen=True)
class Verdict:
    decision: str
    reasons: tuple[str, ...] = ()
    refinement_hints: tuple[str, ...] = ()

    def to_json(self) -> dict:
        record = {
            "schema_version": SCHEMA_VERSION,
            "decision": self.decision,
            "reasons": list(self.reasons),
        }
        if self.decision == "revise":
            record["refinement_hints"] = list(self.refinement_hints)
        return record


# -- validators -------------------------------------------------------------


def parse_complexity_estimate(obj: dict) -> ComplexityEstimate:
    level = obj.get("rc_level")
    if not _is_int(level) or level not in (1, 2, 3):
        raise SchemaViolation('field "rc_level" must be 1, 2 or 3')
    rationale = obj.get("rationale", "")
    if not isinstance(rationale, str):
        raise SchemaViolation('field "rationale" must be a string')
    return ComplexityEstimate(rc_level=level, rationale=rationale)


def parse_interpretation(obj: dict, revision: int, queries_per_concept: int) -> InterpretationRecord:
    raw_concepts = obj.get("concepts")
    if not isinstance(raw_concepts, list) or not raw_concepts:
        raise SchemaViolation('field "concepts" must be a non-empty array')
    concepts = []
    for raw in raw_concepts:
        if not isinstance(raw, dict) or not isinstance(raw.get("name"), str) or not raw["name"]:
            raise SchemaViolation('every concept needs a non-empty string "name"')
        elements = raw.get("clinical_elements", [])
        if not isinstance(elements, list) or not all(isinstance(e, str) for e in elements):
            raise SchemaViolation('"clinical_elements" must be an array of strings')
        concepts.append(Concept(name=raw["name"], clinical_elements=tuple(elements)))
    names = [c.name for c in concepts]

    raw_queries = obj.get("queries")
    if not isinstance(raw_queries, list) or not raw_queries:
        raise SchemaViolation('field "queries" must be a non-empty array')
    queries = []
    for raw in raw_queries:
        if not isinstance(raw, dict) or not isinstance(raw.get("query"), str) or not raw["query"]:
            raise SchemaViolation('every query needs a non-empty string "query"')
        concept = raw.get("concept")
        if concept not in names:
            raise SchemaViolation(f'query references unknown concept {concept!r}')
        queries.append(SearchQuery(concept=concept, query=raw["query"]))

    # enforce the per-concept query budget by keeping the earliest queries
    kept: list[SearchQuery] = []
    per_concept: dict[str, int] = {}
    for query in queries:
        used = per_concept.get(query.concept, 0)
        if used < queries_per_concept:
            kept.append(query)
            per_concept[query.concept] = used + 1
    if not kept:
        raise SchemaViolation("no queries left after applying the per-concept budget")
    return InterpretationRecord(concepts=tuple(concepts), queries=tuple(kept), revision=revision)


def parse_synthesized_answer(obj: dict, n_options: int, allowed_paths: set[str]) -> SynthesizedAnswer:
    choice = obj.get("choice_index")
    if not _is_int(choice) or not 0 <= choice < n_options:
        raise SchemaViolation(f'"choice_index" must be an integer in [0, {n_options})')
    raw_assessments = obj.get("option_assessments")
    if not isinstance(raw_assessments, list):
        raise SchemaViolation('field "option_assessments" must be an array')
    by_index: dict[int, OptionAssessment] = {}
    for raw in raw_assessments:
        if not isinstance(raw, dict):
            raise SchemaViolation("every option assessment must be an object")
        idx = raw.get("option_index")
        if not _is_int(idx) or not 0 <= idx < n_options:
            raise SchemaViolation(f'"option_index" must be an integer in [0, {n_options})')
        if idx in by_index:
            raise SchemaViolation(f"option {idx} assessed twice")
        verdict = raw.get("verdict")
        if verdict not in VERDICTS:
            raise SchemaViolation(f'"verdict" must be one of {list(VERDICTS)}')
        note = raw.get("note", "")
        if not isinstance(note, str):
            raise SchemaViolation('"note" must be a string')
        by_index[idx] = OptionAssessment(option_index=idx, verdict=verdict, note=note)
    if len(by_index) != n_options:
        missing = sorted(set(range(n_options)) - set(by_index))
        raise SchemaViolation(f"options {missing} received no assessment")
    cited = obj.get("cited_evidence", [])
    if not isinstance(cited, list) or not all(isinstance(p, str) for p in cited):
        raise SchemaViolation('"cited_evidence" must be an array of paths')
    unknown = [p for p in cited if p not in allowed_paths]
    if unknown:
        raise SchemaViolation(f"cited evidence not in the manifest: {unknown}")
    assessments = tuple(by_index[i] for i in range(n_options))
    return SynthesizedAnswer(choice_index=choice, assessments=assessments, cited_evidence=tuple(cited))


def parse_verdict(obj: dict) -> Verdict:
    decision = obj.get("decision")
    if decision not in DECISIONS:
        raise SchemaViolation(f'"decision" must be one of {list(DECISIONS)}')
    reasons = obj.get("reasons", [])
    if not isinstance(reasons, list) or not all(isinstance(r, str) for r in reasons):
        raise SchemaViolation('"reasons" must be an array of strings')
    hints = obj.get("refinement_hints", [])
    if not isinstance(hints, list) or not all(isinstance(h, str) for h in hints):
        raise SchemaViolation('"refinement_hints" must be an array of strings')
    if decision == "revise" and not hints:
        raise SchemaViolation("a revise verdict must carry refinement hints")
    if decision == "approve" and hints:
        raise SchemaViolation("an approve verdict must not carry refinement hints")
    return Verdict(decision=decision, reasons=tuple(reasons), refinement_hints=tuple(hints))


def parse_notes(obj: dict) -> str:
    notes = obj.get("notes")
    if not isinstance(notes, str):
        raise SchemaViolation('field "notes" must be a string')
    return notes


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)
