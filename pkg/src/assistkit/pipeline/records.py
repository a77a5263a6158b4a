"""Coding-process records and their three ingestion routes.

A record is an ordered series of snapshots of one file, ending in the
final snippet. Records come from git commit pairs, from chronological
online-judge submission streams, or are synthesized by prompting an LLM
to act out a programmer writing the seed snippet.
"""

from __future__ import annotations

import enum
import hashlib
import re
from dataclasses import dataclass, field

from ..documents import TextDocument
from ..llm_client import ChatBackend, ChatRequest
from .prompts_loader import PromptLibrary

ACCEPTED_VERDICTS = frozenset({"ac", "accepted", "ok", "pass", "passed"})

_FENCED_BLOCK_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)


class IdenticalSnapshots(Exception):
    """A commit pair whose sides are equal carries no edit."""


class UnparseableHistory(Exception):
    """The LLM reply could not be read as a sequence of code snapshots."""


class RecordSource(enum.Enum):
    AI_PROGRAMMER = "ai_programmer"
    GIT_COMMIT = "git_commit"
    ONLINE_SUBMIT = "online_submit"


def _normalize(text: str) -> TextDocument:
    return TextDocument.from_text(text).with_trailing_newline()


def _content_id(*parts: str) -> str:
    digest = hashlib.sha256("\x00".join(parts).encode("utf-8")).hexdigest()
    return digest[:12]


@dataclass(frozen=True)
class ProcessRecord:
    """Ordered snapshots of one coding process; the last one is final."""

    record_id: str
    source: RecordSource
    snapshots: tuple[TextDocument, ...]
    language: str = "python"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.snapshots) < 2:
            raise ValueError("a process record needs at least two snapshots")
        for idx, (prev, cur) in enumerate(zip(self.snapshots, self.snapshots[1:])):
            if prev == cur:
                raise ValueError(f"snapshots {idx} and {idx + 1} are identical")
            if not prev.trailing_newline or not cur.trailing_newline:
                raise ValueError("snapshots must be normalized")

    @property
    def final(self) -> TextDocument:
        return self.snapshots[-1]


def _dedupe(snapshots: list[TextDocument]) -> list[TextDocument]:
    out: list[TextDocument] = []
    for snap in snapshots:
        if not out or out[-1] != snap:
            out.append(snap)
    return out


def ingest_git(
    before: str | TextDocument,
    after: str | TextDocument,
    message: str,
    record_id: str | None = None,
    language: str = "python",
) -> ProcessRecord:
    """Two-snapshot record from one commit's pre/post file contents."""
    before_doc = _normalize(before if isinstance(before, str) else before.content)
    after_doc = _normalize(after if isinstance(after, str) else after.content)
    if before_doc == after_doc:
        raise IdenticalSnapshots("commit does not change the file")
    return ProcessRecord(
        record_id=record_id or _content_id("git", before_doc.content, after_doc.content, message),
        source=RecordSource.GIT_COMMIT,
        snapshots=(before_doc, after_doc),
        language=language,
        metadata={"commit_message": message},
    )


def ingest_submissions(
    attempts: list[tuple[str, str]],
    record_id: str | None = None,
    language: str = "python",
    problem: str | None = None,
) -> ProcessRecord | None:
    """Record ending at the first accepted attempt; None when unusable.

    Attempts must be in chronological order. Groups with no accepted
    verdict are rejected, as are groups that collapse below two distinct
    snapshots.
    """
    accepted_at = next(
        (i for i, (_, verdict) in enumerate(attempts) if verdict.lower() in ACCEPTED_VERDICTS),
        None,
    )
    if accepted_at is None:
        return None
    snapshots = _dedupe([_normalize(code) for code, _ in attempts[: accepted_at + 1]])
    if len(snapshots) < 2:
        return None
    metadata = {"verdicts": [v for _, v in attempts[: accepted_at + 1]]}
    if problem is not None:
        metadata["problem"] = problem
    return ProcessRecord(
        record_id=record_id or _content_id("submit", *(s.content for s in snapshots)),
        source=RecordSource.ONLINE_SUBMIT,
        snapshots=tuple(snapshots),
        language=language,
        metadata=metadata,
    )


def extract_code_blocks(text: str) -> list[str]:
    return [match.group(1) for match in _FENCED_BLOCK_RE.finditer(text)]


def gen_history_ai(
    seed_code: str | TextDocument,
    persona: str,
    client: ChatBackend,
    prompts: PromptLibrary | None = None,
    model_id: str = "default",
    language: str = "python",
    temperature: float = 0.7,
    max_tokens: int = 4096,
    retries: int = 1,
    record_id: str | None = None,
) -> ProcessRecord:
    """Ask an LLM to act out writing ``seed_code`` step by step.

    The reply's fenced code blocks become the snapshots. If the last block
    drifts from the seed it is replaced by the seed and the repair is
    flagged in the record metadata.
    """
    prompts = prompts or PromptLibrary()
    seed = _normalize(seed_code if isinstance(seed_code, str) else seed_code.content)
    request = ChatRequest(
        model_id=model_id,
        messages=(
            ("system", prompts.persona_system(persona)),
            ("user", prompts.fill("persona_user", language=language, final_code=seed.content)),
        ),
        temperature=temperature,
        max_tokens=max_tokens,
    )
    snapshots: list[TextDocument] = []
    for _ in range(retries + 1):
        reply = client.complete(request)
        blocks = extract_code_blocks(reply)
        snapshots = _dedupe([_normalize(block) for block in blocks])
        if len(snapshots) >= 2:
            break
    if len(snapshots) < 2:
        raise UnparseableHistory(f"no usable snapshot sequence for persona {persona!r}")
    repaired = snapshots[-1] != seed
    if repaired:
        snapshots[-1] = seed
        snapshots = _dedupe(snapshots)
        if len(snapshots) < 2:
            raise UnparseableHistory("history collapsed onto the seed snippet")
    return ProcessRecord(
        record_id=record_id or _content_id("ai", persona, seed.content),
        source=RecordSource.AI_PROGRAMMER,
        snapshots=tuple(snapshots),
        language=language,
        metadata={"persona": persona, "repaired": repaired},
    )
