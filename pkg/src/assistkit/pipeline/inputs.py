"""Readers for the three JSONL input formats feeding the pipeline.

Git pairs:       {"before": str, "after": str, "message": str, "language"?: str, "id"?: str}
Submissions:     {"problem_id": str, "user_id": str, "attempts": [{"code": str, "verdict": str}], "language"?: str}
Seed snippets:   {"code": str, "language"?: str, "id"?: str}
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from ..llm_client import ChatBackend, ClientError
from .prompts_loader import PERSONAS, PromptLibrary
from .records import (
    IdenticalSnapshots,
    ProcessRecord,
    UnparseableHistory,
    gen_history_ai,
    ingest_git,
    ingest_submissions,
)
from .synthesis import DiscardInfo, derive_seed


@dataclass
class IngestResult:
    records: list[ProcessRecord]
    discards: list[DiscardInfo]


def _read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from exc


def read_git_pairs(path: str | Path) -> IngestResult:
    result = IngestResult([], [])
    for lineno, row in _read_jsonl(path):
        row_id = row.get("id", f"git:{Path(path).name}:{lineno}")
        try:
            result.records.append(
                ingest_git(
                    row["before"],
                    row["after"],
                    row.get("message", ""),
                    record_id=row_id,
                    language=row.get("language", "python"),
                )
            )
        except IdenticalSnapshots:
            result.discards.append(DiscardInfo(row_id, "identical_snapshots"))
        except KeyError as exc:
            raise ValueError(f"{path}:{lineno}: missing field {exc}") from exc
    return result


def read_submissions(path: str | Path) -> IngestResult:
    result = IngestResult([], [])
    for lineno, row in _read_jsonl(path):
        row_id = row.get(
            "id", f"submit:{row.get('problem_id', '?')}:{row.get('user_id', lineno)}"
        )
        try:
            attempts = [(a["code"], a["verdict"]) for a in row["attempts"]]
        except KeyError as exc:
            raise ValueError(f"{path}:{lineno}: missing field {exc}") from exc
        record = ingest_submissions(
            attempts,
            record_id=row_id,
            language=row.get("language", "python"),
            problem=row.get("problem"),
        )
        if record is None:
            result.discards.append(DiscardInfo(row_id, "no_valid_submission_chain"))
        else:
            result.records.append(record)
    return result


def read_seeds(
    path: str | Path,
    client: ChatBackend,
    global_seed: int = 0,
    prompts: PromptLibrary | None = None,
    model_id: str = "default",
) -> IngestResult:
    """Expand seed snippets into records by prompting the backend."""
    prompts = prompts or PromptLibrary()
    result = IngestResult([], [])
    for lineno, row in _read_jsonl(path):
        row_id = row.get("id", f"seed:{Path(path).name}:{lineno}")
        rng = random.Random(derive_seed(global_seed, row_id, "persona"))
        persona = rng.choice(list(PERSONAS))
        try:
            result.records.append(
                gen_history_ai(
                    row["code"],
                    persona,
                    client,
                    prompts,
                    model_id=model_id,
                    language=row.get("language", "python"),
                    record_id=row_id,
                )
            )
        except UnparseableHistory as exc:
            result.discards.append(DiscardInfo(row_id, "unparseable_history", str(exc)))
        except ClientError as exc:
            result.discards.append(DiscardInfo(row_id, "backend_error", str(exc)))
        except KeyError as exc:
            raise ValueError(f"{path}:{lineno}: missing field {exc}") from exc
    return result
