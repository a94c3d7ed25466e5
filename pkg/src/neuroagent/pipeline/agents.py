"""The five pipeline agents.

Each agent renders a prompt template, calls the gateway, and parses the
reply against its schema.  Replies that fail extraction or validation are
re-prompted with the error appended, up to the configured repair budget;
a reply that never passes surfaces as UnparseableAgentOutput, so nothing
malformed ever reaches a downstream agent.
"""

from __future__ import annotations

import json
import string
import time
from importlib import resources

from .. import knowledge
from ..errors import UnparseableAgentOutput
from ..gateway import ChatMessage, ChatRequest, Gateway
from ..knowledge import VectorIndex, count_tokens, token_spans
from ..util import digest_of
from .config import PipelineConfig
from .jsonio import extract_json_object
from .schemas import (
    SCHEMA_VERSION,
    ComplexityEstimate,
    EvidenceItem,
    EvidenceManifest,
    InterpretationRecord,
    QueryEvidence,
    RoundEvidence,
    SchemaViolation,
    SynthesizedAnswer,
    Verdict,
    parse_complexity_estimate,
    parse_interpretation,
    parse_notes,
    parse_synthesized_answer,
    parse_verdict,
)
from .trace import PipelineTrace
from .workspace import Workspace

OPTION_LETTERS = "ABCDEF"

# round-2 query expansion: this many leading tokens of each first-round hit
EXPANSION_PREFIX_TOKENS = 20

_TEMPLATE_CACHE: dict[str, string.Template] = {}


def _template(name: str) -> string.Template:
    template = _TEMPLATE_CACHE.get(name)
    if template is None:
        text = (resources.files(__package__) / "templates" / name).read_text(encoding="utf-8")
        template = string.Template(text)
        _TEMPLATE_CACHE[name] = template
    return template


def render_template(name: str, **values: str) -> str:
    return _template(name).substitute(**values)


def question_block(question) -> str:
    lines = [question.stem, "", "options:"]
    for i, option in enumerate(question.options):
        lines.append(f"{OPTION_LETTERS[i]}) {option}")
    return "\n".join(lines)


def _call_agent(gateway: Gateway, cfg: PipelineConfig, agent: str, prompt: str, parse, trace: PipelineTrace):
    """One agent exchange with the JSON repair loop."""
    messages: list[ChatMessage] = [ChatMessage("user", prompt)]
    digest = ""
    error = "no attempts made"
    for _ in range(cfg.json_repair_retries + 1):
        request = ChatRequest(
            model_id=gateway.backend.chat_model,
            messages=tuple(messages),
            sampling=cfg.sampling,
        )
        digest = request.digest()
        started = time.time()
        try:
            completion = gateway.complete(request)
        except Exception as exc:
            trace.add_step(agent, digest, None, f"{type(exc).__name__}: {exc}", started, time.time())
            raise
        obj = extract_json_object(completion.text)
        parsed = None
        if obj is None:
            error = "reply contained no JSON object"
        else:
            try:
                parsed = parse(obj)
            except SchemaViolation as exc:
                error = str(exc)
        if parsed is not None:
            output = parsed.to_json() if hasattr(parsed, "to_json") else parsed
            trace.add_step(agent, digest, output, None, started, time.time())
            return parsed
        trace.add_step(agent, digest, None, error, started, time.time())
        messages = messages + [
            ChatMessage("assistant", completion.text),
            ChatMessage(
                "user",
                f"Your reply was invalid: {error}. Reply again with only a JSON object matching the requested schema.",
            ),
        ]
    raise UnparseableAgentOutput(agent, digest, error)


# -- agent 1: complexity classifier ---------------------------------------


def classify_complexity(question, gateway: Gateway, cfg: PipelineConfig, trace: PipelineTrace | None = None) -> ComplexityEstimate:
    """Grade the reasoning complexity of a question (level 1-3).

    The level selects the retrieval budget for the rest of the run.
    """
    trace = trace if trace is not None else PipelineTrace(question.id)
    prompt = render_template(
        "classifier.txt",
        question_id=question.id,
        question_block=question_block(question),
    )
    return _call_agent(gateway, cfg, "classify", prompt, parse_complexity_estimate, trace)


# -- agent 2: question interpreter -----------------------------------------


def interpret_question(
    question,
    hints,
    gateway: Gateway,
    cfg: PipelineConfig,
    *,
    level: int = 2,
    revision: int = 0,
    trace: PipelineTrace | None = None,
) -> InterpretationRecord:
    """Decompose the question into concepts and search queries.

    On revision cycles the validator's refinement hints are injected into
    the prompt; the returned record carries the revision number.
    """
    trace = trace if trace is not None else PipelineTrace(question.id)
    budget = cfg.budgets[level]
    if hints:
        hint_lines = "\n".join(f"- {hint}" for hint in hints)
        hints_block = f"\nThe validator rejected the previous analysis. Address these points:\n{hint_lines}\n"
    else:
        hints_block = ""
    prompt = render_template(
        "interpreter.txt",
        question_id=question.id,
        revision=str(revision),
        queries_per_concept=str(budget.queries_per_concept),
        question_block=question_block(question),
        hints_block=hints_block,
    )
    return _call_agent(
        gateway,
        cfg,
        "interpret",
        prompt,
        lambda obj: parse_interpretation(obj, revision=revision, queries_per_concept=budget.queries_per_concept),
        trace,
    )


# -- agent 3: research retrieval --------------------------------------------


def retrieve_evidence(
    record: InterpretationRecord,
    index: VectorIndex,
    ws: Workspace,
    cfg: PipelineConfig,
    level: int,
    gateway: Gateway,
    trace: PipelineTrace | None = None,
) -> EvidenceManifest:
    """Search the knowledge base for every query and persist each hit.

    Hits are saved as ``evidence/{query}_{round}_{rank}.json`` with text
    and provenance.  Later rounds re-query with the query string expanded
    by prefixes of the first round's hits; a chunk already saved for the
    same query is not saved again.
    """
    trace = trace if trace is not None else PipelineTrace("")
    budget = cfg.budgets[level]
    started = time.time()
    queries_out: list[QueryEvidence] = []
    n_files = 0
    for qi, search in enumerate(record.queries):
        seen: set[tuple[str, int]] = set()
        rounds: list[RoundEvidence] = []
        first_round_hits: list = []
        for rnd in range(1, budget.rounds + 1):
            if rnd == 1:
                query_text = search.query
            else:
                prefixes = [_token_prefix(hit.chunk.text, EXPANSION_PREFIX_TOKENS) for hit in first_round_hits]
                query_text = " ".join([search.query] + prefixes)
            hits = knowledge.retrieve(index, query_text, gateway.embed, budget.top_k)
            if rnd == 1:
                first_round_hits = hits
            items: list[EvidenceItem] = []
            for rank, hit in enumerate(hits):
                if hit.chunk.ref() in seen:
                    continue
                seen.add(hit.chunk.ref())
                path = f"evidence/{qi}_{rnd}_{rank}.json"
                ws.save_json(
                    path,
                    {
                        "schema_version": SCHEMA_VERSION,
                        "doc_id": hit.chunk.doc_id,
                        "seq": hit.chunk.seq,
                        "token_span": list(hit.chunk.token_span),
                        "text": hit.chunk.text,
                        "score": hit.score,
                        "query": search.query,
                        "round": rnd,
                        "rank": rank,
                    },
                )
                n_files += 1
                items.append(
                    EvidenceItem(path=path, doc_id=hit.chunk.doc_id, seq=hit.chunk.seq, rank=rank, score=hit.score)
                )
            rounds.append(RoundEvidence(round=rnd, items=tuple(items)))
        queries_out.append(QueryEvidence(query_index=qi, query=search.query, rounds=tuple(rounds)))
    manifest = EvidenceManifest(queries=tuple(queries_out))
    ws.save_json("evidence_manifest.json", manifest.to_json())
    trace.add_step(
        "retrieve",
        digest_of({"queries": [s.query for s in record.queries], "level": level}),
        {"files_saved": n_files, "queries": len(record.queries), "rounds": budget.rounds},
        None,
        started,
        time.time(),
    )
    return manifest


def _token_prefix(text: str, n_tokens: int) -> str:
    spans = token_spans(text)
    if not spans:
        return ""
    end = spans[min(n_tokens, len(spans)) - 1][1]
    return text[:end]


# -- agent 4: answer synthesis -----------------------------------------------


def synthesize_answer(
    question,
    record: InterpretationRecord,
    manifest: EvidenceManifest,
    ws: Workspace,
    gateway: Gateway,
    cfg: PipelineConfig,
    trace: PipelineTrace | None = None,
) -> SynthesizedAnswer:
    """Assess every option against the saved evidence and pick an answer.

    Evidence is read back in token-bounded slices and fed to the model in
    batches of at most read_chunk_tokens evidence tokens per call;
    intermediate calls accumulate running notes, the final call produces
    the answer.  An empty manifest falls back to a single call on base
    knowledge.
    """
    trace = trace if trace is not None else PipelineTrace(question.id)
    slices: list[tuple[str, int, str]] = []
    for path in manifest.all_paths():
        slice_index = 0
        while True:
            text, more = ws.read_file(path, slice_index, cfg.read_chunk_tokens)
            slices.append((path, slice_index, text))
            if not more:
                break
            slice_index += 1

    batches: list[list[tuple[str, int, str]]] = [[]]
    used = 0
    for item in slices:
        tokens = count_tokens(item[2])
        if batches[-1] and used + tokens > cfg.read_chunk_tokens:
            batches.append([])
            used = 0
        batches[-1].append(item)
        used += tokens

    allowed = set(manifest.all_paths())
    notes = "(none yet)"
    answer: SynthesizedAnswer | None = None
    for bi, batch in enumerate(batches):
        if batch:
            evidence_block = "\n\n".join(
                f"--- {path} (slice {idx}) ---\n{text}" for path, idx, text in batch
            )
        else:
            evidence_block = "(no retrieved evidence; answer from base knowledge)"
        final = bi == len(batches) - 1
        template = "synthesizer_answer.txt" if final else "synthesizer_notes.txt"
        prompt = render_template(
            template,
            question_id=question.id,
            question_block=question_block(question),
            notes=notes,
            evidence_block=evidence_block,
            batch=str(bi + 1),
            total_batches=str(len(batches)),
        )
        if final:
            answer = _call_agent(
                gateway,
                cfg,
                "synthesize",
                prompt,
                lambda obj: parse_synthesized_answer(obj, n_options=len(question.options), allowed_paths=allowed),
                trace,
            )
        else:
            notes = _call_agent(gateway, cfg, "synthesize", prompt, parse_notes, trace)
    ws.save_json("synthesis.json", answer.to_json())
    return answer


# -- agent 5: validator --------------------------------------------------------


def validate_answer(
    question,
    answer: SynthesizedAnswer,
    manifest: EvidenceManifest,
    gateway: Gateway,
    cfg: PipelineConfig,
    *,
    cycle: int = 1,
    ws: Workspace | None = None,
    trace: PipelineTrace | None = None,
) -> Verdict:
    """Final quality gate: approve the answer or send it back with hints."""
    trace = trace if trace is not None else PipelineTrace(question.id)
    if ws is not None and answer.cited_evidence:
        parts = []
        for path in answer.cited_evidence:
            text, _ = ws.read_file(path, 0, cfg.read_chunk_tokens)
            parts.append(f"--- {path} ---\n{text}")
        evidence_block = "\n\n".join(parts)
    else:
        evidence_block = "(no evidence cited)"
    prompt = render_template(
        "validator.txt",
        question_id=question.id,
        cycle=str(cycle),
        question_block=question_block(question),
        answer_json=json.dumps(answer.to_json(), sort_keys=True),
        evidence_block=evidence_block,
    )
    return _call_agent(gateway, cfg, "validate", prompt, parse_verdict, trace)
