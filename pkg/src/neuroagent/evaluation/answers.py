"""Pulling a committed option letter out of free-form model output.

The grammar runs in priority tiers: an explicit JSON ``{"answer": "X"}``
object beats prose patterns ("the answer is X", "answer: X", "(X)", a
standalone letter line).  Within a tier the last match in the text wins,
since models habitually restate their final choice after deliberating;
distinct letters tied at the winning position make the reply Invalid,
reported as None and scored incorrect.
"""

from __future__ import annotations

import re

from ..pipeline.jsonio import iter_json_objects

OPTION_LETTERS = "ABCDEF"

_LETTER_VALUE = re.compile(r"\(?([A-Za-z])[).:]?\s*$")
_PHRASE_PATTERNS = (
    re.compile(r"answer\s+is\s*:?\s*\(?([A-Za-z])\)?(?![A-Za-z])", re.IGNORECASE),
    re.compile(r"answer\s*:\s*\(?([A-Za-z])\)?(?![A-Za-z])", re.IGNORECASE),
    re.compile(r"\(([A-Za-z])\)"),
)
_STANDALONE_LINE = re.compile(r"^\s*\(?([A-Za-z])[).:]?\s*$")


def extract_choice(text: str, n_options: int) -> int | None:
    """Map completion text to a 0-based option index, or None if Invalid."""
    if not 2 <= n_options <= 6:
        raise ValueError(f"n_options must be in [2, 6], got {n_options}")
    valid = OPTION_LETTERS[:n_options]

    json_answers = _json_answer_fields(text)
    if json_answers:
        return _letter_index(json_answers[-1], valid)

    matches: list[tuple[int, str]] = []  # (end position, letter)
    for pattern in _PHRASE_PATTERNS:
        for m in pattern.finditer(text):
            letter = m.group(1).upper()
            if letter in valid:
                matches.append((m.end(1), letter))
    offset = 0
    for line in text.splitlines(keepends=True):
        m = _STANDALONE_LINE.match(line)
        if m:
            letter = m.group(1).upper()
            if letter in valid:
                matches.append((offset + m.end(1), letter))
        offset += len(line)
    if not matches:
        return None
    winning_pos = max(pos for pos, _ in matches)
    winners = {letter for pos, letter in matches if pos == winning_pos}
    if len(winners) != 1:
        return None
    return valid.index(next(iter(winners)))


def _json_answer_fields(text: str) -> list[str]:
    """Values of the "answer" field across every JSON object in the text."""
    return [obj["answer"] for obj in iter_json_objects(text) if isinstance(obj.get("answer"), str)]


def _letter_index(value: str, valid: str) -> int | None:
    m = _LETTER_VALUE.fullmatch(value.strip())
    if m is None:
        return None
    letter = m.group(1).upper()
    if letter not in valid:
        return None
    return valid.index(letter)
