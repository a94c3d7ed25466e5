"""Run configuration file.

One JSON file holds everything a run needs — backend endpoint, model
ids, sampling, chunking, retrieval budgets, loop bounds — so a run is
reproducible from (config, dataset, index) alone.  Secrets never appear
here: the API key is read from the environment variable the config
names.  Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MalformedRecord
from .gateway import BackendConfig, Gateway, MockScript, SamplingParams, TranscriptLog
from .knowledge import ChunkingConfig
from .pipeline import PipelineConfig, RetrievalBudget, default_budgets
from .util import sha256_hex


@dataclass(frozen=True)
class Settings:
    backend: BackendConfig = BackendConfig()
    mock_script: MockScript | None = None
    sampling: SamplingParams = SamplingParams()
    chunking: ChunkingConfig = ChunkingConfig()
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    rag_top_k: int = 5
    parallelism: int = 1
    index_path: Path | None = None
    dataset_profile: str = "generic"
    digest: str = ""

    def make_gateway(self, transcript: TranscriptLog | None = None) -> Gateway:
        return Gateway(self.backend, script=self.mock_script, transcript=transcript)


def load_settings(path: Path) -> Settings:
    """Load and validate a config file; its digest is recorded for manifests."""
    path = Path(path)
    raw_bytes = path.read_bytes()
    try:
        raw = json.loads(raw_bytes.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedRecord(0, f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedRecord(0, f"config {path} must be a JSON object")
    base_dir = path.parent

    try:
        backend = BackendConfig(**raw.get("backend", {}))
        sampling = SamplingParams(**raw.get("sampling", {}))
        chunking = ChunkingConfig(**raw.get("chunking", {}))
        pipeline = _pipeline_config(raw.get("pipeline", {}), sampling)
        mock_script = _mock_script(raw.get("mock_script"), base_dir)
    except (TypeError, ValueError) as exc:
        raise MalformedRecord(0, f"config {path}: {exc}") from exc

    if backend.kind == "mock" and mock_script is None:
        raise MalformedRecord(0, f"config {path}: mock backend needs a mock_script")
    index_path = raw.get("index_path")
    profile = raw.get("dataset_profile", "generic")
    if profile not in ("board", "generic"):
        raise MalformedRecord(0, f"config {path}: unknown dataset_profile {profile!r}")
    return Settings(
        backend=backend,
        mock_script=mock_script,
        sampling=sampling,
        chunking=chunking,
        pipeline=pipeline,
        rag_top_k=raw.get("rag_top_k", 5),
        parallelism=raw.get("parallelism", 1),
        index_path=(base_dir / index_path) if index_path else None,
        dataset_profile=profile,
        digest=sha256_hex(raw_bytes),
    )


def _pipeline_config(raw: dict, sampling: SamplingParams) -> PipelineConfig:
    budgets = default_budgets()
    for level, values in raw.get("budgets", {}).items():
        budgets[int(level)] = RetrievalBudget(*values)
    return PipelineConfig(
        max_validation_cycles=raw.get("max_validation_cycles", 2),
        budgets=budgets,
        read_chunk_tokens=raw.get("read_chunk_tokens", 1024),
        json_repair_retries=raw.get("json_repair_retries", 2),
        sampling=sampling,
    )


def _mock_script(raw, base_dir: Path) -> MockScript | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        script_path = base_dir / raw
        raw = json.loads(script_path.read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise ValueError("mock_script must be a path or an object")
    return MockScript.from_json(raw)
