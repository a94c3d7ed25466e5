"""Extracting JSON objects from model replies.

Models wrap JSON in prose more often than not, so agent parsing first
pulls out the earliest balanced ``{...}`` region that loads as a JSON
object.  Anything beyond that (schema problems) is handled by the
repair/re-prompt loop in the agent layer.
"""

from __future__ import annotations

import json


def extract_json_object(text: str) -> dict | None:
    """Return the first balanced top-level JSON object found in `text`.

    Balancing is string-aware: braces inside string literals do not
    count.  Regions that balance but fail to parse are skipped and the
    scan continues at the next opening brace.
    """
    for obj in iter_json_objects(text):
        return obj
    return None


def iter_json_objects(text: str):
    """Yield every parseable balanced JSON object in `text`, in order."""
    i = 0
    n = len(text)
    while i < n:
        if text[i] != "{":
            i += 1
            continue
        end = _balanced_end(text, i)
        if end is None:
            i += 1
            continue
        try:
            obj = json.loads(text[i : end + 1])
        except json.JSONDecodeError:
            i += 1
            continue
        if isinstance(obj, dict):
            yield obj
            i = end + 1
        else:
            i += 1


def _balanced_end(text: str, start: int) -> int | None:
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
    return None
