"""Training-sample model and its JSONL wire form."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from ..conversation import (
    Conversation,
    Message,
    Role,
    conversation_from_dict,
    conversation_to_dict,
    message_from_dict,
    message_to_dict,
)
from ..edits import EditFormat

SAMPLE_SCHEMA_VERSION = 1


class SampleType(enum.Enum):
    """Which optional inputs accompany the current code."""

    C = "c"
    HC = "hc"
    CU = "cu"
    HCU = "hcu"

    @property
    def has_history(self) -> bool:
        return self in (SampleType.HC, SampleType.HCU)

    @property
    def has_user(self) -> bool:
        return self in (SampleType.CU, SampleType.HCU)


class SchemaVersionError(Exception):
    pass


@dataclass(frozen=True)
class Provenance:
    record_id: str
    time_index: int  # 1-based snapshot position chosen as the current code
    global_seed: int
    sample_seed: int


@dataclass(frozen=True)
class TrainingSample:
    """One synthesized conversation plus the assistant turn to learn."""

    conversation: Conversation
    target: Message
    sample_type: SampleType
    format: EditFormat
    provenance: Provenance

    def __post_init__(self) -> None:
        if self.target.role is not Role.ASSISTANT:
            raise ValueError("target must be an assistant message")
        roles = [m.role for m in self.conversation.messages]
        if Role.ASSISTANT in roles:
            raise ValueError("conversation must not already contain an assistant turn")
        history_count = sum(1 for r in roles if r is Role.HISTORY)
        user_count = sum(1 for r in roles if r is Role.USER)
        if self.sample_type.has_history != (history_count > 0):
            raise ValueError(f"type {self.sample_type.value} disagrees with history messages")
        if self.sample_type.has_user != (user_count > 0):
            raise ValueError(f"type {self.sample_type.value} disagrees with user messages")

    @property
    def sample_id(self) -> str:
        return f"{self.provenance.record_id}@{self.provenance.time_index}"


def sample_to_dict(sample: TrainingSample) -> dict:
    return {
        "schema": SAMPLE_SCHEMA_VERSION,
        "sample_type": sample.sample_type.value,
        "format": sample.format.value,
        "conversation": conversation_to_dict(sample.conversation),
        "target": message_to_dict(sample.target),
        "provenance": {
            "record_id": sample.provenance.record_id,
            "time_index": sample.provenance.time_index,
            "global_seed": sample.provenance.global_seed,
            "sample_seed": sample.provenance.sample_seed,
        },
    }


def sample_from_dict(data: dict) -> TrainingSample:
    version = data.get("schema")
    if version != SAMPLE_SCHEMA_VERSION:
        raise SchemaVersionError(f"expected schema {SAMPLE_SCHEMA_VERSION}, got {version!r}")
    prov = data["provenance"]
    return TrainingSample(
        conversation=conversation_from_dict(data["conversation"]),
        target=message_from_dict(data["target"]),
        sample_type=SampleType(data["sample_type"]),
        format=EditFormat(data["format"]),
        provenance=Provenance(
            record_id=prov["record_id"],
            time_index=int(prov["time_index"]),
            global_seed=int(prov["global_seed"]),
            sample_seed=int(prov["sample_seed"]),
        ),
    )


def emit_jsonl(samples: Iterable[TrainingSample], path: str | Path) -> int:
    """Write samples one JSON object per line; returns the count written."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for sample in samples:
            handle.write(json.dumps(sample_to_dict(sample), sort_keys=True) + "\n")
            count += 1
    return count


def load_jsonl(path: str | Path) -> list[TrainingSample]:
    samples = []
    with Path(path).open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
            try:
                samples.append(sample_from_dict(data))
            except (KeyError, ValueError) as exc:
                if isinstance(exc, SchemaVersionError):
                    raise SchemaVersionError(f"{path}:{lineno}: {exc}") from exc
                raise ValueError(f"{path}:{lineno}: bad sample: {exc}") from exc
    return samples
