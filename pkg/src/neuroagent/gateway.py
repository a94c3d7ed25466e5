"""Uniform client for chat-completion and embedding endpoints.

Two backends share one surface: ``http`` speaks the OpenAI-compatible
wire protocol (POST /v1/chat/completions and /v1/embeddings) with retries,
exponential backoff with full jitter, and an optional shared rate limit;
``mock`` serves deterministic scripted responses so whole pipeline runs
replay offline.  Every call, including failures, is appended to a
transcript log.

Embeddings are L2-normalized here, at the gateway, so cosine similarity
is a plain dot product everywhere downstream.
"""

from __future__ import annotations

import hashlib
import math
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import requests

from .errors import (
    BadStatus,
    DimensionMismatch,
    EmbeddingFailure,
    EmptyInput,
    MockUnmatched,
    Transport,
)
from .knowledge import count_tokens
from .util import canonical_json, digest_of

ROLES = ("system", "user", "assistant")
DEFAULT_API_KEY_ENV = "NEUROAGENT_API_KEY"

# HTTP statuses retried as transient, alongside connection errors.
_TRANSIENT_STATUSES = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.7
    top_p: float = 0.9
    max_output_tokens: int = 1024

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    text: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class ChatRequest:
    model_id: str
    messages: tuple[ChatMessage, ...]
    sampling: SamplingParams = SamplingParams()

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("a chat request needs at least one message")

    def digest(self) -> str:
        return digest_of(self.to_json())

    def to_json(self) -> dict:
        return {
            "model": self.model_id,
            "messages": [{"role": m.role, "content": m.text} for m in self.messages],
            "temperature": self.sampling.temperature,
            "top_p": self.sampling.top_p,
            "max_tokens": self.sampling.max_output_tokens,
        }

    def joined_text(self) -> str:
        return "\n".join(m.text for m in self.messages)


@dataclass(frozen=True)
class Completion:
    text: str
    finish_reason: str = "stop"
    usage: dict | None = None


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "mock"
    base_url: str = ""
    api_key_env: str = DEFAULT_API_KEY_ENV
    request_timeout: float = 30.0
    max_retries: int = 3
    rate_limit_rpm: float | None = None
    chat_model: str = "mock-chat"
    embed_model: str = "mock-embed"
    backoff_initial: float = 0.5

    def __post_init__(self):
        if self.kind not in ("http", "mock"):
            raise ValueError(f"backend kind must be http or mock, got {self.kind!r}")
        if self.request_timeout <= 0:
            raise ValueError("request_timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env) or None


# -- scripted mock backend -------------------------------------------------


@dataclass(frozen=True)
class MockRule:
    """One scripted response: a glob pattern over the request text.

    ``*`` matches any run of characters (newlines included) and ``?`` a
    single character.  The response may reference wildcard captures as
    {1}, {2}, ... and the whole request text as {0}, so a rule like
    pattern "echo:*" with response "{1}" echoes the payload back.
    """

    pattern: str
    response: str

    def match(self, text: str) -> str | None:
        m = _glob_regex(self.pattern).fullmatch(text)
        if m is None:
            return None
        return _interpolate(self.response, (m.group(0),) + m.groups())


@dataclass(frozen=True)
class MockScript:
    """Ordered scripted responses plus a seeded deterministic embedder.

    Matching is deterministic (first matching rule wins) and total over
    the scripted domain: an unmatched request is an error, never a silent
    default.
    """

    rules: tuple[MockRule, ...] = ()
    embed_seed: int = 0
    embed_dimension: int = 64

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.embed_dimension <= 0:
            raise ValueError("embed_dimension must be positive")

    def respond(self, request_text: str) -> str | None:
        for rule in self.rules:
            reply = rule.match(request_text)
            if reply is not None:
                return reply
        return None

    def embed_one(self, text: str) -> np.ndarray:
        return mock_embedding(text, self.embed_dimension, self.embed_seed)

    @classmethod
    def from_json(cls, obj: dict) -> "MockScript":
        rules = tuple(MockRule(pattern=r["pattern"], response=r["response"]) for r in obj.get("rules", []))
        return cls(
            rules=rules,
            embed_seed=obj.get("seed", 0),
            embed_dimension=obj.get("dimension", 64),
        )


_GLOB_CACHE: dict[str, re.Pattern] = {}


def _glob_regex(pattern: str) -> re.Pattern:
    compiled = _GLOB_CACHE.get(pattern)
    if compiled is None:
        parts = []
        for ch in pattern:
            if ch == "*":
                parts.append("(.*)")
            elif ch == "?":
                parts.append("(.)")
            else:
                parts.append(re.escape(ch))
        compiled = re.compile("".join(parts), re.DOTALL)
        _GLOB_CACHE[pattern] = compiled
    return compiled


def _interpolate(template: str, groups: tuple[str, ...]) -> str:
    out = template
    for i, group in enumerate(groups):
        out = out.replace("{%d}" % i, group)
    return out


def mock_embedding(text: str, dimension: int, seed: int) -> np.ndarray:
    """Deterministic text-to-vector map: hashed character trigrams.

    Texts sharing trigrams land near each other, giving tests a usable
    similarity structure without any model.  The result is unit length.
    """
    vec = np.zeros(dimension, dtype=np.float64)
    padded = f"\x02{text}\x03"
    grams = [padded[i : i + 3] for i in range(len(padded) - 2)] or [padded]
    for gram in grams:
        h = hashlib.blake2b(gram.encode("utf-8"), digest_size=8, key=str(seed).encode("utf-8")).digest()
        value = int.from_bytes(h, "little")
        bucket = value % dimension
        sign = 1.0 if (value >> 62) & 1 else -1.0
        vec[bucket] += sign
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        h = hashlib.blake2b(padded.encode("utf-8"), digest_size=8, key=str(seed).encode("utf-8")).digest()
        vec[int.from_bytes(h, "little") % dimension] = 1.0
        norm = 1.0
    return vec / norm


# -- transcript ------------------------------------------------------------


class TranscriptLog:
    """Append-only exchange log: one entry per gateway call.

    Entries are kept in memory and, when a path is given, appended to a
    JSON-lines file.  Appends are serialized so concurrent workers can
    share one log.
    """

    def __init__(self, path: Path | None = None):
        self.path = Path(path) if path is not None else None
        self.entries: list[dict] = []
        self._lock = threading.Lock()
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def append(self, entry: dict) -> None:
        with self._lock:
            self.entries.append(entry)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(canonical_json(entry) + "\n")

    def __len__(self) -> int:
        return len(self.entries)


class _TokenBucket:
    """Shared requests-per-minute limiter."""

    def __init__(self, per_minute: float, clock=time.monotonic, sleeper=time.sleep):
        self.capacity = per_minute
        self.rate = per_minute / 60.0
        self.tokens = per_minute
        self._clock = clock
        self._sleeper = sleeper
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self._clock()
                self.tokens = min(self.capacity, self.tokens + (now - self._last) * self.rate)
                self._last = now
                if self.tokens >= 1.0:
                    self.tokens -= 1.0
                    return
                wait = (1.0 - self.tokens) / self.rate
            self._sleeper(wait)


# -- the gateway -----------------------------------------------------------


class Gateway:
    """One client object per backend; safe for concurrent callers."""

    def __init__(
        self,
        backend: BackendConfig,
        script: MockScript | None = None,
        transcript: TranscriptLog | None = None,
        *,
        sleeper=time.sleep,
        jitter_rng: random.Random | None = None,
        session: requests.Session | None = None,
    ):
        if backend.kind == "mock" and script is None:
            raise ValueError("mock backend needs a MockScript")
        self.backend = backend
        self.script = script
        self.transcript = transcript if transcript is not None else TranscriptLog()
        self._sleeper = sleeper
        self._rng = jitter_rng if jitter_rng is not None else random.Random()
        self._session = session
        self._limiter = (
            _TokenBucket(backend.rate_limit_rpm, sleeper=sleeper)
            if backend.rate_limit_rpm
            else None
        )

    # -- chat --------------------------------------------------------------

    def complete(self, request: ChatRequest) -> Completion:
        """Run one chat completion, retrying transient transport failures.

        Every call is logged to the transcript exactly once, with the
        per-attempt outcomes nested in the entry.
        """
        digest = request.digest()
        entry: dict = {
            "ts": time.time(),
            "kind": "chat",
            "request_digest": digest,
            "request": request.to_json(),
            "attempts": [],
            "response": None,
            "error": None,
        }
        try:
            if self.backend.kind == "mock":
                completion = self._complete_mock(request, entry)
            else:
                completion = self._complete_http(request, entry)
            entry["response"] = {
                "text": completion.text,
                "finish_reason": completion.finish_reason,
                "usage": completion.usage,
            }
            return completion
        except Exception as exc:
            entry["error"] = self._redact(f"{type(exc).__name__}: {exc}")
            raise
        finally:
            self.transcript.append(entry)

    def _complete_mock(self, request: ChatRequest, entry: dict) -> Completion:
        text = self.script.respond(request.joined_text())
        entry["attempts"].append({"backend": "mock", "ok": text is not None})
        if text is None:
            raise MockUnmatched(request.digest())
        usage = {
            "prompt_tokens": count_tokens(request.joined_text()),
            "completion_tokens": count_tokens(text),
        }
        return Completion(text=text, finish_reason="stop", usage=usage)

    def _complete_http(self, request: ChatRequest, entry: dict) -> Completion:
        body = self._post_with_retries("/v1/chat/completions", request.to_json(), entry)
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"]
            finish = choice.get("finish_reason") or "stop"
        except (KeyError, IndexError, TypeError) as exc:
            raise BadStatus(200, f"malformed completion body: {exc}") from exc
        if finish not in ("stop", "length", "error"):
            finish = "stop"
        return Completion(text=text, finish_reason=finish, usage=body.get("usage"))

    # -- embeddings ---------------------------------------------------------

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        """Embed texts to one unit vector each; shape (len(texts), dim)."""
        texts = list(texts)
        entry: dict = {
            "ts": time.time(),
            "kind": "embedding",
            "request_digest": digest_of({"model": self.backend.embed_model, "input": texts}),
            "n_texts": len(texts),
            "attempts": [],
            "error": None,
        }
        try:
            if not texts or any(not t for t in texts):
                raise EmptyInput("embedding input must be non-empty strings")
            if self.backend.kind == "mock":
                entry["attempts"].append({"backend": "mock", "ok": True})
                vectors = np.stack([self.script.embed_one(t) for t in texts])
            else:
                vectors = self._embed_http(texts, entry)
            vectors = self._normalize(vectors)
            entry["dimension"] = int(vectors.shape[1])
            return vectors
        except Exception as exc:
            entry["error"] = self._redact(f"{type(exc).__name__}: {exc}")
            raise
        finally:
            self.transcript.append(entry)

    def _embed_http(self, texts: list[str], entry: dict) -> np.ndarray:
        payload = {"model": self.backend.embed_model, "input": texts}
        body = self._post_with_retries("/v1/embeddings", payload, entry)
        try:
            data = sorted(body["data"], key=lambda item: item["index"])
            rows = [item["embedding"] for item in data]
        except (KeyError, TypeError) as exc:
            raise BadStatus(200, f"malformed embedding body: {exc}") from exc
        if len(rows) != len(texts):
            raise DimensionMismatch(f"asked for {len(texts)} embeddings, got {len(rows)}")
        lengths = {len(r) for r in rows}
        if len(lengths) != 1:
            raise DimensionMismatch(f"endpoint returned ragged vectors of lengths {sorted(lengths)}")
        return np.asarray(rows, dtype=np.float64)

    @staticmethod
    def _normalize(vectors: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            raise EmbeddingFailure("endpoint returned a zero vector")
        return vectors / norms[:, None]

    # -- HTTP plumbing -------------------------------------------------------

    def _post_with_retries(self, route: str, payload: dict, entry: dict) -> dict:
        url = self.backend.base_url.rstrip("/") + route
        headers = {"Content-Type": "application/json"}
        key = self.backend.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        attempt = 0
        while True:
            attempt += 1
            if self._limiter is not None:
                self._limiter.acquire()
            status: int | None = None
            failure: str | None = None
            try:
                response = self._http_post(url, payload, headers)
                status = response.status_code
                if status == 200:
                    try:
                        body = response.json()
                    except ValueError as exc:
                        entry["attempts"].append({"status": status, "ok": False, "error": "body is not JSON"})
                        raise BadStatus(status, "response body is not JSON") from exc
                    entry["attempts"].append({"status": status, "ok": True})
                    return body
                failure = self._redact(response.text)
            except requests.RequestException as exc:
                failure = self._redact(str(exc))
            entry["attempts"].append({"status": status, "ok": False, "error": failure})
            transient = status is None or status in _TRANSIENT_STATUSES
            if not transient:
                raise BadStatus(status, failure or "")
            if attempt > self.backend.max_retries:
                raise Transport(f"gave up after {attempt} attempts: {failure}")
            self._backoff(attempt)

    def _http_post(self, url: str, payload: dict, headers: dict) -> requests.Response:
        poster = self._session.post if self._session is not None else requests.post
        return poster(url, json=payload, headers=headers, timeout=self.backend.request_timeout)

    def _backoff(self, attempt: int) -> None:
        cap = self.backend.backoff_initial * math.pow(2.0, attempt - 1)
        self._sleeper(self._rng.uniform(0.0, cap))

    def _redact(self, text: str) -> str:
        key = self.backend.api_key()
        if key and key in text:
            text = text.replace(key, "[redacted]")
        return text
