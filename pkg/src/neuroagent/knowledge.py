"""Corpus chunking and the exact-cosine vector index.

Documents are sliced into token windows (default 512 tokens with 128
overlap, so windows start every 384 tokens), embedded, and kept in an
immutable in-memory index searched by brute-force cosine.  The corpus
scale this serves (one textbook) makes exact search cheap and keeps the
ranking contract trivial to verify against an exhaustive oracle.

The default tokenizer splits on whitespace and detaches punctuation; it
approximates, and can be swapped for, whatever tokenizer produced the
chunk-size numbers a corpus was tuned with.
"""

from __future__ import annotations

import hashlib
import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ChecksumMismatch, EmptyCorpus, FormatVersionMismatch, IoFailure

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_SENTENCE_END = (".", "!", "?")

_MAGIC = b"NAVIDX"
_FORMAT_VERSION = 1

Tokenizer = Callable[[str], list[tuple[int, int]]]
Embedder = Callable[[Sequence[str]], np.ndarray]


def token_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of the tokens of `text` under the default rule."""
    return [m.span() for m in _TOKEN_RE.finditer(text)]


def count_tokens(text: str, tokenizer: Tokenizer = token_spans) -> int:
    return len(tokenizer(text))


@dataclass(frozen=True)
class ChunkingConfig:
    chunk_tokens: int = 512
    overlap_tokens: int = 128
    sentence_snap: bool = False

    def __post_init__(self):
        if self.chunk_tokens <= 0:
            raise ValueError("chunk_tokens must be positive")
        if self.overlap_tokens < 0 or self.overlap_tokens >= self.chunk_tokens:
            raise ValueError("overlap_tokens must be in [0, chunk_tokens)")

    @property
    def stride(self) -> int:
        return self.chunk_tokens - self.overlap_tokens


@dataclass(frozen=True)
class Chunk:
    """A token-bounded slice of one document; the unit of retrieval."""

    doc_id: str
    seq: int
    token_span: tuple[int, int]
    text: str

    def ref(self) -> tuple[str, int]:
        return (self.doc_id, self.seq)

    def to_json(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "seq": self.seq,
            "token_span": list(self.token_span),
            "text": self.text,
        }

    @classmethod
    def from_json(cls, record: dict) -> "Chunk":
        return cls(
            doc_id=record["doc_id"],
            seq=record["seq"],
            token_span=(record["token_span"][0], record["token_span"][1]),
            text=record["text"],
        )


def chunk_document(
    doc_id: str,
    text: str,
    cfg: ChunkingConfig,
    tokenizer: Tokenizer = token_spans,
) -> list[Chunk]:
    """Slice a document into overlapping token windows.

    Windows start at multiples of the stride and stop as soon as one
    reaches the document end, so no window falls entirely inside its
    predecessor's overlap.  With sentence_snap a full window is shortened
    (never lengthened) to the last sentence boundary inside it, and the
    following window starts overlap_tokens before the snapped end to keep
    the chunks covering every token.
    """
    spans = tokenizer(text)
    n = len(spans)
    if n == 0:
        return []
    chunks: list[Chunk] = []
    start = 0
    seq = 0
    while True:
        end = min(start + cfg.chunk_tokens, n)
        if cfg.sentence_snap and end < n:
            snapped = _snap_to_sentence(text, spans, start, end)
            # only snap when the next window still advances
            if snapped is not None and snapped - cfg.overlap_tokens > start:
                end = snapped
        chunk_text = text[spans[start][0] : spans[end - 1][1]]
        chunks.append(Chunk(doc_id=doc_id, seq=seq, token_span=(start, end), text=chunk_text))
        if end >= n:
            break
        start = end - cfg.overlap_tokens if cfg.sentence_snap else start + cfg.stride
        seq += 1
    return chunks


def _snap_to_sentence(text: str, spans: list[tuple[int, int]], start: int, end: int) -> int | None:
    for i in range(end - 1, start, -1):
        tok_start, tok_end = spans[i]
        if text[tok_start:tok_end] in _SENTENCE_END:
            return i + 1
    return None


def iter_corpus_documents(corpus_dir: Path) -> Iterable[tuple[str, str]]:
    """Yield (doc_id, text) for every file under a corpus directory.

    One document per UTF-8 plain-text file; doc_id is the relative path.
    Sorted for deterministic chunk ordering.
    """
    corpus_dir = Path(corpus_dir)
    paths = sorted(p for p in corpus_dir.rglob("*") if p.is_file())
    for path in paths:
        yield path.relative_to(corpus_dir).as_posix(), path.read_text(encoding="utf-8")


def chunk_corpus(corpus_dir: Path, cfg: ChunkingConfig, tokenizer: Tokenizer = token_spans) -> list[Chunk]:
    chunks: list[Chunk] = []
    for doc_id, text in iter_corpus_documents(corpus_dir):
        chunks.extend(chunk_document(doc_id, text, cfg, tokenizer))
    return chunks


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    score: float


@dataclass(frozen=True)
class VectorIndex:
    """Immutable collection of (chunk, unit vector) entries.

    Vectors are stored as float32 rows, matching the on-disk format, so a
    persist/open round trip is bit-exact.
    """

    dimension: int
    chunks: tuple[Chunk, ...]
    vectors: np.ndarray = field(repr=False)
    corpus_digest: str = ""

    def __post_init__(self):
        object.__setattr__(self, "chunks", tuple(self.chunks))
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        if vectors.shape != (len(self.chunks), self.dimension):
            raise ValueError(f"vector matrix {vectors.shape} does not match {len(self.chunks)} chunks of dimension {self.dimension}")

    def __len__(self) -> int:
        return len(self.chunks)

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorIndex):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.corpus_digest == other.corpus_digest
            and self.chunks == other.chunks
            and self.vectors.tobytes() == other.vectors.tobytes()
        )


def corpus_digest(chunks: Sequence[Chunk]) -> str:
    digest = hashlib.sha256()
    for chunk in chunks:
        digest.update(chunk.text.encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


def build_index(chunks: Sequence[Chunk], embedder: Embedder) -> VectorIndex:
    """Embed every chunk and assemble the index, order-stable."""
    if not chunks:
        raise EmptyCorpus("cannot build an index over zero chunks")
    vectors = np.asarray(embedder([c.text for c in chunks]), dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != len(chunks):
        raise ValueError(f"embedder returned shape {vectors.shape} for {len(chunks)} chunks")
    return VectorIndex(
        dimension=vectors.shape[1],
        chunks=tuple(chunks),
        vectors=vectors.astype(np.float32),
        corpus_digest=corpus_digest(chunks),
    )


def retrieve(index: VectorIndex, query_text: str, embedder: Embedder, k: int) -> list[ScoredChunk]:
    """Exact top-k cosine search over the whole index.

    Returns min(k, len(index)) results ranked by score descending, ties
    broken by (doc_id, seq) ascending — identical to a brute-force scan.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(index) == 0:
        raise EmptyCorpus("retrieve over an empty index")
    query = np.asarray(embedder([query_text]), dtype=np.float64).reshape(-1)
    if query.shape[0] != index.dimension:
        raise ValueError(f"query dimension {query.shape[0]} != index dimension {index.dimension}")
    scores = index.vectors.astype(np.float64) @ query
    order = sorted(
        range(len(index)),
        key=lambda i: (-scores[i], index.chunks[i].doc_id, index.chunks[i].seq),
    )
    return [ScoredChunk(chunk=index.chunks[i], score=float(scores[i])) for i in order[:k]]


def persist_index(index: VectorIndex, path: Path) -> None:
    """Write the index in its binary format.

    Layout: magic + version, dimension, count, corpus digest, float32
    little-endian vectors, a JSON metadata block, and a whole-file sha256
    trailer for corruption detection.
    """
    meta = json.dumps([c.to_json() for c in index.chunks], ensure_ascii=False, sort_keys=True).encode("utf-8")
    digest_bytes = bytes.fromhex(index.corpus_digest) if index.corpus_digest else b"\x00" * 32
    header = _MAGIC + struct.pack(
        "<HII32s",
        _FORMAT_VERSION,
        index.dimension,
        len(index),
        digest_bytes,
    )
    vectors = index.vectors.astype("<f4").tobytes()
    body = header + vectors + struct.pack("<Q", len(meta)) + meta
    checksum = hashlib.sha256(body).digest()
    try:
        Path(path).write_bytes(body + checksum)
    except OSError as exc:
        raise IoFailure(f"cannot write index file {path}: {exc}") from exc


def open_index(path: Path) -> VectorIndex:
    """Read an index file back, verifying format version and checksum."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read index file {path}: {exc}") from exc
    header_size = len(_MAGIC) + struct.calcsize("<HII32s")
    if len(data) < header_size + 32:
        raise ChecksumMismatch(f"index file {path} is truncated")
    if data[: len(_MAGIC)] != _MAGIC:
        raise FormatVersionMismatch(f"{path} is not an index file (bad magic)")
    version, dimension, count, digest_bytes = struct.unpack(
        "<HII32s", data[len(_MAGIC) : header_size]
    )
    if version != _FORMAT_VERSION:
        raise FormatVersionMismatch(f"index format version {version}, expected {_FORMAT_VERSION}")
    body, trailer = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != trailer:
        raise ChecksumMismatch(f"index file {path} failed checksum verification")
    offset = header_size
    vector_bytes = count * dimension * 4
    if len(body) < offset + vector_bytes + 8:
        raise ChecksumMismatch(f"index file {path} is truncated")
    vectors = np.frombuffer(body, dtype="<f4", count=count * dimension, offset=offset).reshape(count, dimension)
    offset += vector_bytes
    (meta_len,) = struct.unpack_from("<Q", body, offset)
    offset += 8
    meta_raw = body[offset : offset + meta_len]
    if len(meta_raw) != meta_len:
        raise ChecksumMismatch(f"index file {path} is truncated")
    try:
        meta = json.loads(meta_raw.decode("utf-8"))
        chunks = tuple(Chunk.from_json(record) for record in meta)
    except (ValueError, KeyError, IndexError) as exc:
        raise IoFailure(f"index file {path} has unreadable metadata: {exc}") from exc
    return VectorIndex(
        dimension=dimension,
        chunks=chunks,
        vectors=vectors,
        corpus_digest="" if digest_bytes == b"\x00" * 32 else digest_bytes.hex(),
    )
