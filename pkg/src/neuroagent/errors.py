"""Exception hierarchy shared across the package.

Errors are grouped by subsystem so the CLI can map them onto exit codes:
data errors (datasets, index files, workspaces) and backend errors
(transport, bad status, unmatched mock rules).
"""

from __future__ import annotations


class NeuroagentError(Exception):
    """Base class for all package errors."""


# -- dataset / data model ------------------------------------------------


class DataError(NeuroagentError):
    """Base class for dataset and file-format problems."""


class MalformedRecord(DataError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class DuplicateId(DataError):
    def __init__(self, qid: str):
        super().__init__(f"duplicate question id {qid!r}")
        self.qid = qid


class ProfileViolation(DataError):
    def __init__(self, qid: str, reason: str):
        super().__init__(f"question {qid!r}: {reason}")
        self.qid = qid
        self.reason = reason


class UnknownAnswerKey(DataError):
    def __init__(self, letter: str):
        super().__init__(f"answer key {letter!r} has no matching option")
        self.letter = letter


class EmptyOption(DataError):
    def __init__(self, key: str):
        super().__init__(f"option {key!r} is empty")
        self.key = key


# -- gateway -------------------------------------------------------------


class BackendError(NeuroagentError):
    """Base class for model-endpoint failures."""


class Transport(BackendError):
    """Transient transport failure that persisted through all retries."""


class BadStatus(BackendError):
    def __init__(self, code: int, body: str):
        super().__init__(f"backend returned status {code}: {body[:200]}")
        self.code = code
        self.body = body


class MockUnmatched(BackendError):
    def __init__(self, digest: str):
        super().__init__(f"no mock rule matches request {digest}")
        self.digest = digest


class DimensionMismatch(BackendError):
    """Embedding endpoint returned vectors of inconsistent dimension."""


class EmptyInput(NeuroagentError):
    """Embedding input was empty or contained an empty string."""


class EmbeddingFailure(BackendError):
    """Embedding request failed or produced unusable vectors."""


# -- knowledge base ------------------------------------------------------


class EmptyCorpus(DataError):
    """Index build requested over zero chunks."""


class IoFailure(DataError):
    """Underlying file read/write failed."""


class FormatVersionMismatch(DataError):
    """Index file magic or version does not match this implementation."""


class ChecksumMismatch(DataError):
    """Index file content does not match its checksum trailer."""


# -- workspace / pipeline ------------------------------------------------


class PathEscape(DataError):
    def __init__(self, name: str):
        super().__init__(f"path {name!r} escapes the workspace root")
        self.name = name


class WorkspaceNotFound(DataError):
    def __init__(self, name: str):
        super().__init__(f"no workspace file named {name!r}")
        self.name = name


class SliceOutOfRange(DataError):
    def __init__(self, name: str, index: int, n_slices: int):
        super().__init__(f"{name!r} has {n_slices} slices, requested {index}")
        self.name = name
        self.index = index
        self.n_slices = n_slices


class UnparseableAgentOutput(NeuroagentError):
    """Agent reply failed JSON extraction or schema validation after all
    repair retries."""

    def __init__(self, agent: str, transcript_ref: str, reason: str):
        super().__init__(f"{agent}: {reason} (transcript {transcript_ref})")
        self.agent = agent
        self.transcript_ref = transcript_ref
        self.reason = reason


# -- statistics / evaluation ----------------------------------------------


class StatsError(NeuroagentError):
    """Base class for statistics-input problems."""


class EmptyResults(StatsError):
    """Metric requested over an empty result list."""


class DomainError(StatsError):
    """Argument outside the function's domain."""


class ZeroMargin(StatsError):
    """Contingency table has an all-zero row or column."""


class LengthMismatch(StatsError):
    """Paired samples have different lengths."""


class ZeroVariance(StatsError):
    """Correlation requested over a constant sample."""


class NoLabeledQuestions(StatsError):
    """Breakdown or correlation requested but no question carries the label."""


# -- CLI -----------------------------------------------------------------


class UsageError(NeuroagentError):
    """Command line could not be parsed; carries the usage text."""

    def __init__(self, message: str, usage: str = ""):
        super().__init__(message)
        self.usage = usage
