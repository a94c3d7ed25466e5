"""MCQ data model and ingestion.

Datasets are UTF-8 JSON-lines files, one question per line:

    {"id": "...", "exam_id": "...", "stem": "...", "options": [...],
     "correct_index": 0, "subspecialty": "...", "complexity": {"fkd": 1, "cci": 2, "rc": 3}}

``subspecialty`` and ``complexity`` are optional.  Two validation profiles
exist: ``board`` requires exactly four options per question, ``generic``
accepts two to six (so externally sourced MCQ sets load unchanged).
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Union

from .errors import (
    DuplicateId,
    EmptyOption,
    MalformedRecord,
    ProfileViolation,
    UnknownAnswerKey,
)

PROFILES = ("board", "generic")
MIN_OPTIONS = 2
MAX_OPTIONS = 6
BOARD_OPTIONS = 4

Source = Union[bytes, str, Path, IO[bytes]]


class Subspecialty(Enum):
    """Closed 13-value taxonomy used to stratify benchmark results."""

    BEHAVIORAL_COGNITIVE = "Behavioral & Cognitive Neurology"
    CSF_CIRCULATION = "CSF Circulation Disorders"
    EPILEPSY = "Epilepsy"
    GENETIC = "Genetic Neurology"
    HEADACHE_DIZZINESS = "Headache and Dizziness"
    INFECTIOUS = "Infectious Neurology"
    MISCELLANEOUS = "Miscellaneous"
    MOVEMENT = "Movement Disorders"
    NEURO_ONCOLOGY = "Neuro-oncology"
    NEUROIMMUNOLOGY = "Neuroimmunology"
    NEUROMUSCULAR = "Neuromuscular"
    NEUROPHTHALMOLOGY = "Neurophthalmology"
    VASCULAR = "Vascular Neurology"

    @classmethod
    def parse(cls, label: str) -> "Subspecialty":
        """Map a label to its enum value, normalizing case and whitespace.

        Unknown labels raise ValueError: misspellings are errors, not new
        categories, so breakdown tables keep a fixed row set.
        """
        wanted = _normalize_label(label)
        for member in cls:
            if _normalize_label(member.value) == wanted:
                return member
        raise ValueError(f"unknown subspecialty {label!r}")


def _normalize_label(label: str) -> str:
    return " ".join(label.split()).lower()


@dataclass(frozen=True)
class ComplexityProfile:
    """Three-dimensional difficulty grading, each dimension level 1-3.

    fkd: depth of factual knowledge required.
    cci: number of clinical concepts that must be integrated.
    rc:  sophistication of the reasoning chain.
    """

    fkd: int
    cci: int
    rc: int

    def __post_init__(self):
        for dim in ("fkd", "cci", "rc"):
            level = getattr(self, dim)
            if not isinstance(level, int) or isinstance(level, bool) or level not in (1, 2, 3):
                raise ValueError(f"{dim} level must be 1, 2 or 3, got {level!r}")

    def to_json(self) -> dict:
        return {"fkd": self.fkd, "cci": self.cci, "rc": self.rc}


def composite_score(profile: ComplexityProfile) -> int:
    """Sum of the three dimension levels, in [3, 9]."""
    return profile.fkd + profile.cci + profile.rc


@dataclass(frozen=True)
class Question:
    """One multiple-choice question with its answer key and labels."""

    id: str
    exam_id: str
    stem: str
    options: tuple[str, ...]
    correct_index: int
    subspecialty: Subspecialty | None = None
    complexity: ComplexityProfile | None = None

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if not (MIN_OPTIONS <= len(self.options) <= MAX_OPTIONS):
            raise ValueError(f"question {self.id!r}: expected {MIN_OPTIONS}-{MAX_OPTIONS} options, got {len(self.options)}")
        if any(not opt for opt in self.options):
            raise ValueError(f"question {self.id!r}: empty option text")
        if len(set(self.options)) != len(self.options):
            raise ValueError(f"question {self.id!r}: options must be pairwise distinct")
        if not (0 <= self.correct_index < len(self.options)):
            raise ValueError(f"question {self.id!r}: correct_index {self.correct_index} out of range for {len(self.options)} options")

    def to_json(self) -> dict:
        record: dict = {
            "id": self.id,
            "exam_id": self.exam_id,
            "stem": self.stem,
            "options": list(self.options),
            "correct_index": self.correct_index,
        }
        if self.subspecialty is not None:
            record["subspecialty"] = self.subspecialty.value
        if self.complexity is not None:
            record["complexity"] = self.complexity.to_json()
        return record


@dataclass(frozen=True)
class Dataset:
    name: str
    questions: tuple[Question, ...]
    validation_profile: str = "generic"

    def __post_init__(self):
        object.__setattr__(self, "questions", tuple(self.questions))
        if self.validation_profile not in PROFILES:
            raise ValueError(f"unknown validation profile {self.validation_profile!r}")

    def __len__(self) -> int:
        return len(self.questions)

    def by_id(self) -> dict[str, Question]:
        return {q.id: q for q in self.questions}

    def digest(self) -> str:
        """Content hash over the serialized dataset."""
        return hashlib.sha256(serialize_dataset(self)).hexdigest()


def parse_dataset(source: Source, profile: str = "generic", name: str = "dataset") -> Dataset:
    """Parse a JSON-lines dataset, validating every question under `profile`.

    Raises MalformedRecord for schema problems (missing or mistyped fields,
    unknown subspecialty labels), ProfileViolation for invariant failures
    (option count, out-of-range answer index, duplicate option texts) and
    DuplicateId for repeated question ids.  Parse order is preserved.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown validation profile {profile!r}")
    questions: list[Question] = []
    seen: set[str] = set()
    for lineno, line in enumerate(_iter_lines(source), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(lineno, f"invalid JSON: {exc.msg}") from exc
        if not isinstance(record, dict):
            raise MalformedRecord(lineno, "record is not a JSON object")
        question = _question_from_record(record, lineno, profile)
        if question.id in seen:
            raise DuplicateId(question.id)
        seen.add(question.id)
        questions.append(question)
    return Dataset(name=name, questions=tuple(questions), validation_profile=profile)


def serialize_dataset(dataset: Dataset) -> bytes:
    """Inverse of parse_dataset: one compact JSON object per line."""
    lines = [json.dumps(q.to_json(), ensure_ascii=False, sort_keys=True) for q in dataset.questions]
    return ("\n".join(lines) + "\n" if lines else "").encode("utf-8")


def adapt_medqa(record: dict, qid: str | None = None, exam_id: str = "medqa") -> Question:
    """Convert an externally keyed MCQ record (options keyed A..E, answer
    given as a letter) into a Question.

    Options are re-indexed 0-based in key order; the answer letter maps to
    correct_index.  Subspecialty and complexity are left unset: the source
    carries neither label.
    """
    stem = record.get("question")
    if not isinstance(stem, str) or not stem:
        raise MalformedRecord(0, "missing question text")
    options = record.get("options")
    if not isinstance(options, dict) or not options:
        raise MalformedRecord(0, "missing keyed options")
    keys = sorted(options)
    texts = []
    for key in keys:
        text = options[key]
        if not isinstance(text, str) or not text.strip():
            raise EmptyOption(key)
        texts.append(text)
    answer = record.get("answer_idx", record.get("answer"))
    if not isinstance(answer, str):
        raise UnknownAnswerKey(str(answer))
    answer = answer.strip().upper()
    if answer not in keys:
        raise UnknownAnswerKey(answer)
    if qid is None:
        qid = str(record.get("id") or "medqa-" + hashlib.sha1(stem.encode("utf-8")).hexdigest()[:10])
    return Question(
        id=qid,
        exam_id=exam_id,
        stem=stem,
        options=tuple(texts),
        correct_index=keys.index(answer),
    )


def _iter_lines(source: Source) -> Iterable[str]:
    if isinstance(source, Path):
        data = source.read_bytes()
    elif isinstance(source, bytes):
        data = source
    elif isinstance(source, str):
        data = source.encode("utf-8")
    elif hasattr(source, "read"):
        data = source.read()
        if isinstance(data, str):
            data = data.encode("utf-8")
    else:
        raise TypeError(f"unsupported dataset source {type(source)!r}")
    return io.StringIO(data.decode("utf-8"))


def _question_from_record(record: dict, lineno: int, profile: str) -> Question:
    for field in ("id", "exam_id", "stem", "options", "correct_index"):
        if field not in record:
            raise MalformedRecord(lineno, f"missing field {field!r}")
    qid = record["id"]
    if not isinstance(qid, str) or not qid:
        raise MalformedRecord(lineno, "id must be a non-empty string")
    if not isinstance(record["exam_id"], str):
        raise MalformedRecord(lineno, "exam_id must be a string")
    if not isinstance(record["stem"], str) or not record["stem"]:
        raise MalformedRecord(lineno, "stem must be a non-empty string")
    options = record["options"]
    if not isinstance(options, list) or not all(isinstance(o, str) for o in options):
        raise MalformedRecord(lineno, "options must be an array of strings")
    correct_index = record["correct_index"]
    if not isinstance(correct_index, int) or isinstance(correct_index, bool):
        raise MalformedRecord(lineno, "correct_index must be an integer")

    subspecialty = None
    if record.get("subspecialty") is not None:
        label = record["subspecialty"]
        if not isinstance(label, str):
            raise MalformedRecord(lineno, "subspecialty must be a string")
        try:
            subspecialty = Subspecialty.parse(label)
        except ValueError as exc:
            raise MalformedRecord(lineno, str(exc)) from exc

    complexity = None
    if record.get("complexity") is not None:
        raw = record["complexity"]
        if not isinstance(raw, dict) or set(raw) != {"fkd", "cci", "rc"}:
            raise MalformedRecord(lineno, 'complexity must be {"fkd": n, "cci": n, "rc": n}')
        try:
            complexity = ComplexityProfile(fkd=raw["fkd"], cci=raw["cci"], rc=raw["rc"])
        except ValueError as exc:
            raise MalformedRecord(lineno, str(exc)) from exc

    if profile == "board" and len(options) != BOARD_OPTIONS:
        raise ProfileViolation(qid, f"board profile requires {BOARD_OPTIONS} options, got {len(options)}")
    try:
        return Question(
            id=qid,
            exam_id=record["exam_id"],
            stem=record["stem"],
            options=tuple(options),
            correct_index=correct_index,
            subspecialty=subspecialty,
            complexity=complexity,
        )
    except ValueError as exc:
        raise ProfileViolation(qid, str(exc)) from exc
