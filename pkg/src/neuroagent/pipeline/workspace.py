"""Per-run file workspace.

Each pipeline run owns one directory, unique per (question id, run id).
Agents persist intermediate artifacts through save_file and read them
back in token-bounded slices through read_file, which is how large
retrieved contexts survive model context limits.  Every save is recorded
in an append-only manifest of (name, digest) pairs, making runs
auditable after the fact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from ..errors import PathEscape, SliceOutOfRange, WorkspaceNotFound
from ..knowledge import token_spans
from ..util import sha256_hex


class Workspace:
    """File store rooted at one directory; writes cannot escape the root."""

    def __init__(self, root: Path):
        self.root = Path(root).resolve()
        self.root.mkdir(parents=True, exist_ok=True)
        self._manifest_path = self.root / "manifest.jsonl"
        self._entries: list[dict] = []
        if self._manifest_path.exists():
            for line in self._manifest_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._entries.append(json.loads(line))

    @classmethod
    def create(cls, base_dir: Path, question_id: str, run_id: str) -> "Workspace":
        safe_qid = "".join(c if c.isalnum() or c in "-_." else "_" for c in question_id)
        return cls(Path(base_dir) / run_id / safe_qid)

    # -- manifest ------------------------------------------------------------

    @property
    def manifest(self) -> list[dict]:
        return list(self._entries)

    def file_names(self) -> set[str]:
        return {entry["name"] for entry in self._entries}

    def has_file(self, name: str) -> bool:
        return name in self.file_names()

    def validate_manifest(self) -> None:
        """Check that every declared file exists and matches its last digest."""
        latest: dict[str, str] = {entry["name"]: entry["sha256"] for entry in self._entries}
        for name, digest in latest.items():
            path = self._resolve(name)
            if not path.is_file():
                raise WorkspaceNotFound(name)
            actual = sha256_hex(path.read_bytes())
            if actual != digest:
                raise WorkspaceNotFound(f"{name} (content no longer matches manifest digest)")

    # -- save / read -----------------------------------------------------------

    def save_file(self, name: str, content: str) -> str:
        """Write a file inside the workspace and append it to the manifest.

        Returns the workspace-relative path.  Re-saving an existing name
        overwrites the file and appends a fresh manifest entry; earlier
        entries are never rewritten.
        """
        path = self._resolve(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        data = content.encode("utf-8")
        path.write_bytes(data)
        entry = {"name": name, "sha256": sha256_hex(data), "bytes": len(data)}
        self._entries.append(entry)
        with self._manifest_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
        return name

    def save_json(self, name: str, obj: dict) -> str:
        return self.save_file(name, json.dumps(obj, sort_keys=True, ensure_ascii=False, indent=1))

    def read_file(self, name: str, slice_index: int = 0, read_chunk_tokens: int = 1024) -> tuple[str, bool]:
        """Return the slice_index-th token window of a saved file.

        Slices are consecutive windows of at most read_chunk_tokens tokens
        whose concatenation is exactly the file content.  The second
        element of the result says whether more slices remain.
        """
        if read_chunk_tokens <= 0:
            raise ValueError("read_chunk_tokens must be positive")
        path = self._resolve(name)
        if not self.has_file(name) or not path.is_file():
            raise WorkspaceNotFound(name)
        text = path.read_text(encoding="utf-8")
        spans = token_spans(text)
        n_slices = max(1, math.ceil(len(spans) / read_chunk_tokens))
        if not 0 <= slice_index < n_slices:
            raise SliceOutOfRange(name, slice_index, n_slices)
        start = 0 if slice_index == 0 else spans[slice_index * read_chunk_tokens][0]
        is_last = slice_index == n_slices - 1
        end = len(text) if is_last else spans[(slice_index + 1) * read_chunk_tokens][0]
        return text[start:end], not is_last

    def read_whole(self, name: str) -> str:
        path = self._resolve(name)
        if not self.has_file(name) or not path.is_file():
            raise WorkspaceNotFound(name)
        return path.read_text(encoding="utf-8")

    def slice_count(self, name: str, read_chunk_tokens: int = 1024) -> int:
        text = self.read_whole(name)
        return max(1, math.ceil(len(token_spans(text)) / read_chunk_tokens))

    # -- internals --------------------------------------------------------------

    def _resolve(self, name: str) -> Path:
        candidate = Path(name)
        if candidate.is_absolute() or ".." in candidate.parts:
            raise PathEscape(name)
        resolved = (self.root / candidate).resolve()
        if not resolved.is_relative_to(self.root):
            raise PathEscape(name)
        if resolved == self._manifest_path.resolve():
            raise PathEscape(name)
        return resolved
